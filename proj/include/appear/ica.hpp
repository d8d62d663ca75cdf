#pragma once

#include "appear/recording.hpp"

#include <cstdint>
#include <set>

namespace appear {

struct IcaOptions {
    int block = 128;
    int max_sweeps = 512;
    double tolerance = 1e-6;
    double min_samples_factor = 20.0;  // require K > factor * N
    bool extended = true;
    double learning_rate = 0.0;        // 0 picks 0.00065 / log(N)
};

/// x_short = A * S_short; the unmixing matrix is A^-1 = W * sphere. Sources
/// are ordered by descending back-projected variance.
struct IcaDecomposition {
    Eigen::MatrixXd A;
    Eigen::MatrixXd unmixing;
    Matrix S_short;
    IndexMap index_map;
    double fs = 0.0;
    std::uint64_t seed = 0;
    int iterations = 0;
    bool converged = false;

    Index components() const { return A.cols(); }
};

/// Symmetric whitening matrix C^-1/2 of the mean-removed rows of x.
/// Throws SingularMatrixError when the covariance is rank deficient.
Eigen::MatrixXd whitening_matrix(const Matrix& x);

/// Extended Infomax (natural gradient, kurtosis-sign switching) on whitened
/// data in shuffled blocks. Deterministic for a fixed seed.
IcaDecomposition infomax_decompose(const Recording& x_short, std::uint64_t seed, const IcaOptions& options = {},
                                   IndexMap index_map = {});

/// S = A^-1 x for the whole uncut recording.
Matrix project_full(const IcaDecomposition& decomp, const Recording& x_full);

/// A' = A with the removed columns zeroed; returns `like` with data A' S.
Recording reconstruct_without(const IcaDecomposition& decomp, const Matrix& S, const std::set<Index>& removed,
                              const Recording& like);

/// Amari performance index of P = W_est * A_true, normalised to [0, 1];
/// 0 means P is a scaled permutation.
double amari_distance(const Eigen::MatrixXd& P);

} // namespace appear
