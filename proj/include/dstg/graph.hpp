#pragma once

#include <vector>

#include "dstg/tensor.hpp"

namespace dstg {

// N x N nonnegative travel times in seconds, zero diagonal, finite entries.
// Unreachable pairs must be encoded by the loader as a large finite sentinel
// before reaching this type.
struct TravelTimeMatrix {
    int n = 0;
    std::vector<double> seconds;  // row-major N*N

    static TravelTimeMatrix from_values(int n, std::vector<double> seconds);
    double at(int i, int j) const { return seconds[static_cast<size_t>(i) * n + j]; }
};

// Symmetric pairwise closeness, A_ij = exp(-T_ij / sigma) in (0, 1].
struct AffinityMatrix {
    int n = 0;
    double sigma = 0.0;
    std::vector<double> a;

    double at(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }
    Tensor to_tensor() const { return Tensor::from_values({n, n}, a); }
};

// L = I - D^{-1/2} A D^{-1/2}; symmetric PSD with spectrum in [0, 2].
struct GraphLaplacian {
    int n = 0;
    std::vector<double> l;
    std::vector<double> degree;

    double at(int i, int j) const { return l[static_cast<size_t>(i) * n + j]; }
    Tensor to_tensor() const { return Tensor::from_values({n, n}, l); }
};

// Coefficients of the localized polynomial filter sum_k theta_k L^k.
struct SpectralFilter {
    std::vector<double> theta;

    static SpectralFilter from_coeffs(std::vector<double> theta);
    int order() const { return static_cast<int>(theta.size()); }
};

// A_ij = exp(-sym(T)_ij / sigma) with sym(T) = (T + T^T)/2.
// Throws ValidationError on negative travel time or nonpositive sigma.
AffinityMatrix affinity_from_travel_time(const TravelTimeMatrix& t, double sigma, bool zero_diagonal = false);

// Throws ValidationError when A is asymmetric beyond 1e-12 or has negative
// entries. Rows with zero degree get L_ii = 1 and zero off-diagonals.
GraphLaplacian normalized_laplacian(const AffinityMatrix& a);
GraphLaplacian normalized_laplacian_dense(int n, const std::vector<double>& a);

// sum_k theta_k L^k x by iterated mat-vec; never materializes L^k.
std::vector<double> spatial_graph_conv(const std::vector<double>& x, const GraphLaplacian& l,
                                       const SpectralFilter& f);

// Frequency-domain filtering U^T diag(w) U x via a dense symmetric
// eigendecomposition of L. Test-only oracle; not on the training path.
std::vector<double> spectral_conv_oracle(const std::vector<double>& x, const GraphLaplacian& l,
                                         const std::vector<double>& w);

// Eigenvalues of L ascending (dense symmetric solve; used by tests/oracle).
std::vector<double> laplacian_eigenvalues(const GraphLaplacian& l);

}  // namespace dstg
