#include "dstg/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "dstg/model.hpp"

namespace dstg {

using nlohmann::json;

const Tensor* Checkpoint::find(const std::string& name) const {
    for (const auto& [n, t] : entries)
        if (n == name) return &t;
    return nullptr;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    json doc;
    doc["format"] = "dstgcnn-checkpoint";
    doc["version"] = ckpt.version;
    doc["fingerprint"] = ckpt.fingerprint;
    json params = json::object();
    for (const auto& [name, t] : ckpt.entries) {
        json entry;
        entry["shape"] = t.shape();
        entry["values"] = t.values();
        params[name] = std::move(entry);
    }
    doc["params"] = std::move(params);
    std::ofstream out(path);
    if (!out) throw ValidationError("checkpoint: cannot write " + path);
    out << doc.dump(1, '\t') << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("checkpoint: cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ValidationError("checkpoint: " + path + " is not valid JSON: " + e.what());
    }
    if (doc.value("format", "") != "dstgcnn-checkpoint")
        throw ValidationError("checkpoint: " + path + " has unknown format");
    Checkpoint ckpt;
    ckpt.version = doc.value("version", 0);
    if (ckpt.version != 1) throw ValidationError("checkpoint: unsupported version " + std::to_string(ckpt.version));
    ckpt.fingerprint = doc.value("fingerprint", "");
    for (auto& [name, entry] : doc.at("params").items()) {
        Shape shape = entry.at("shape").get<Shape>();
        std::vector<double> values = entry.at("values").get<std::vector<double>>();
        ckpt.entries.emplace_back(name, Tensor::from_values(std::move(shape), std::move(values)));
    }
    return ckpt;
}

void restore_model(Model& model, const Checkpoint& ckpt) {
    const std::string expect = model.config().fingerprint();
    if (ckpt.fingerprint != expect)
        throw ValidationError("checkpoint: fingerprint mismatch\n  checkpoint: " + ckpt.fingerprint +
                              "\n  config:     " + expect);
    for (auto& [name, param] : model.named_parameters()) {
        const Tensor* stored = ckpt.find(name);
        if (!stored) throw ValidationError("checkpoint: missing parameter " + name);
        if (stored->shape() != param.shape())
            throw ValidationError("checkpoint: parameter " + name + " has shape " + shape_to_string(stored->shape()) +
                                  ", model expects " + shape_to_string(param.shape()));
        std::copy(stored->values().begin(), stored->values().end(), param.values().begin());
    }
}

Checkpoint snapshot_model(const Model& model, const std::vector<std::pair<std::string, Tensor>>& extras) {
    Checkpoint ckpt;
    ckpt.fingerprint = model.config().fingerprint();
    for (const auto& [name, t] : model.named_parameters()) ckpt.entries.emplace_back(name, t.clone());
    for (const auto& [name, t] : extras) ckpt.entries.emplace_back(name, t.clone());
    return ckpt;
}

}  // namespace dstg
