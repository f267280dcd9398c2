#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dstg/tensor.hpp"

namespace dstg {

class Model;

// Flat, versioned checkpoint: a JSON map from parameter path (e.g.
// "flow1.stc0.spatial_theta") to shape plus row-major values, alongside the
// producing config's fingerprint. Doubles are written with enough digits to
// round-trip exactly.
struct Checkpoint {
    int version = 1;
    std::string fingerprint;
    std::vector<std::pair<std::string, Tensor>> entries;

    const Tensor* find(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Copies checkpoint values into the model's parameters. Throws
// ValidationError on fingerprint mismatch or any missing/mis-shaped entry,
// so shapes are never silently reinterpreted.
void restore_model(Model& model, const Checkpoint& ckpt);

// Snapshot of the model's parameters (plus any extra named tensors, e.g.
// normalization statistics) ready to save.
Checkpoint snapshot_model(const Model& model, const std::vector<std::pair<std::string, Tensor>>& extras = {});

}  // namespace dstg
