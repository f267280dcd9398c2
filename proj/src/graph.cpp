#include "dstg/graph.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace dstg {

TravelTimeMatrix TravelTimeMatrix::from_values(int n, std::vector<double> seconds) {
    if (n <= 0) throw ValidationError("travel time matrix: node count must be positive");
    if (seconds.size() != static_cast<size_t>(n) * n)
        throw ValidationError("travel time matrix: expected " + std::to_string(static_cast<size_t>(n) * n) +
                              " entries, got " + std::to_string(seconds.size()));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double v = seconds[static_cast<size_t>(i) * n + j];
            if (!std::isfinite(v)) throw ValidationError("travel time matrix: non-finite entry");
            if (v < 0.0) throw ValidationError("travel time matrix: negative entry at (" + std::to_string(i) + "," +
                                               std::to_string(j) + ")");
        }
        if (seconds[static_cast<size_t>(i) * n + i] != 0.0)
            throw ValidationError("travel time matrix: nonzero diagonal at node " + std::to_string(i));
    }
    TravelTimeMatrix t;
    t.n = n;
    t.seconds = std::move(seconds);
    return t;
}

SpectralFilter SpectralFilter::from_coeffs(std::vector<double> theta) {
    if (theta.empty()) throw ValidationError("spectral filter: needs at least one coefficient");
    return SpectralFilter{std::move(theta)};
}

AffinityMatrix affinity_from_travel_time(const TravelTimeMatrix& t, double sigma, bool zero_diagonal) {
    if (sigma <= 0.0) throw ValidationError("affinity: sigma must be positive, got " + std::to_string(sigma));
    const int n = t.n;
    AffinityMatrix a;
    a.n = n;
    a.sigma = sigma;
    a.a.resize(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (t.at(i, j) < 0.0) throw ValidationError("affinity: negative travel time");
            const double sym = 0.5 * (t.at(i, j) + t.at(j, i));
            a.a[static_cast<size_t>(i) * n + j] = std::exp(-sym / sigma);
        }
    }
    if (zero_diagonal)
        for (int i = 0; i < n; ++i) a.a[static_cast<size_t>(i) * n + i] = 0.0;
    return a;
}

GraphLaplacian normalized_laplacian_dense(int n, const std::vector<double>& a) {
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::fabs(a[static_cast<size_t>(i) * n + j] - a[static_cast<size_t>(j) * n + i]) > 1e-12)
                throw ValidationError("laplacian: affinity asymmetric at (" + std::to_string(i) + "," +
                                      std::to_string(j) + ")");
    GraphLaplacian l;
    l.n = n;
    l.degree.assign(static_cast<size_t>(n), 0.0);
    l.l.assign(static_cast<size_t>(n) * n, 0.0);
    std::vector<double> sinv(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double d = 0.0;
        for (int j = 0; j < n; ++j) {
            const double v = a[static_cast<size_t>(i) * n + j];
            if (v < 0.0) throw ValidationError("laplacian: negative affinity entry");
            d += v;
        }
        l.degree[static_cast<size_t>(i)] = d;
        sinv[static_cast<size_t>(i)] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double v = -sinv[static_cast<size_t>(i)] * a[static_cast<size_t>(i) * n + j] * sinv[static_cast<size_t>(j)];
            l.l[static_cast<size_t>(i) * n + j] = (i == j) ? 1.0 + v : v;
        }
    return l;
}

GraphLaplacian normalized_laplacian(const AffinityMatrix& a) {
    return normalized_laplacian_dense(a.n, a.a);
}

std::vector<double> spatial_graph_conv(const std::vector<double>& x, const GraphLaplacian& l,
                                       const SpectralFilter& f) {
    const int n = l.n;
    if (static_cast<int>(x.size()) != n)
        throw ShapeError("spatial_graph_conv: signal length " + std::to_string(x.size()) +
                         " does not match laplacian " + std::to_string(n));
    const int k = f.order();
    std::vector<double> out(static_cast<size_t>(n), 0.0);
    std::vector<double> cur = x, next(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] = f.theta[0] * cur[static_cast<size_t>(i)];
    for (int kk = 1; kk < k; ++kk) {
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += l.l[static_cast<size_t>(i) * n + j] * cur[static_cast<size_t>(j)];
            next[static_cast<size_t>(i)] = acc;
        }
        std::swap(cur, next);
        for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] += f.theta[static_cast<size_t>(kk)] * cur[static_cast<size_t>(i)];
    }
    return out;
}

namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigensolve(const GraphLaplacian& l) {
    const int n = l.n;
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = l.at(i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    if (solver.info() != Eigen::Success) throw NumericError("spectral oracle: eigendecomposition failed to converge");
    return solver;
}

}  // namespace

std::vector<double> spectral_conv_oracle(const std::vector<double>& x, const GraphLaplacian& l,
                                         const std::vector<double>& w) {
    const int n = l.n;
    if (static_cast<int>(x.size()) != n || static_cast<int>(w.size()) != n)
        throw ShapeError("spectral oracle: signal/filter length must equal node count");
    auto solver = eigensolve(l);
    // Rows of U^T are eigenvectors, so U x projects onto the eigenbasis.
    const Eigen::MatrixXd u = solver.eigenvectors().transpose();
    Eigen::VectorXd xv(n);
    for (int i = 0; i < n; ++i) xv(i) = x[static_cast<size_t>(i)];
    Eigen::VectorXd freq = u * xv;
    for (int i = 0; i < n; ++i) freq(i) *= w[static_cast<size_t>(i)];
    Eigen::VectorXd res = u.transpose() * freq;
    std::vector<double> out(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] = res(i);
    return out;
}

std::vector<double> laplacian_eigenvalues(const GraphLaplacian& l) {
    auto solver = eigensolve(l);
    std::vector<double> ev(static_cast<size_t>(l.n));
    for (int i = 0; i < l.n; ++i) ev[static_cast<size_t>(i)] = solver.eigenvalues()(i);
    return ev;
}

}  // namespace dstg
