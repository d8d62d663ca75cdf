#include "appear/ica.hpp"

#include "appear/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace appear {

namespace {

constexpr double kBlowup = 1e8;
constexpr double kRestartFactor = 0.9;
constexpr double kAnnealFactor = 0.9;
constexpr double kAnnealDegrees = 60.0;
constexpr double kMinLrate = 1e-10;
constexpr Index kKurtSize = 6000;
constexpr double kSignsBias = 0.02;

Eigen::MatrixXd centered(const Matrix& x)
{
    Eigen::MatrixXd c = x;
    c.colwise() -= c.rowwise().mean();
    return c;
}

// Kurtosis signs of the current activations on a random subset of samples.
Eigen::VectorXd kurtosis_signs(const Eigen::MatrixXd& W, const Eigen::MatrixXd& xw, std::mt19937_64& rng)
{
    const Index K = xw.cols();
    Eigen::MatrixXd u;
    if (K <= kKurtSize) {
        u = W * xw;
    } else {
        std::uniform_int_distribution<Index> pick(0, K - 1);
        Eigen::MatrixXd sub(xw.rows(), kKurtSize);
        for (Index k = 0; k < kKurtSize; ++k) sub.col(k) = xw.col(pick(rng));
        u = W * sub;
    }
    Eigen::VectorXd signs(u.rows());
    for (Index i = 0; i < u.rows(); ++i) {
        const double m2 = u.row(i).array().square().mean();
        const double m4 = u.row(i).array().square().square().mean();
        const double kurt = m2 > 0 ? m4 / (m2 * m2) - 3.0 : 0.0;
        signs[i] = (kurt + kSignsBias) >= 0 ? 1.0 : -1.0;
    }
    return signs;
}

} // namespace

Eigen::MatrixXd whitening_matrix(const Matrix& x)
{
    if (x.cols() < 2) throw InsufficientDataError("whitening needs at least 2 samples");
    const Eigen::MatrixXd c = centered(x);
    const Eigen::MatrixXd cov = (c * c.transpose()) / static_cast<double>(x.cols() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::VectorXd lam = eig.eigenvalues();
    if (lam.minCoeff() <= 1e-12 * std::max(lam.maxCoeff(), 0.0) || lam.maxCoeff() <= 0)
        throw SingularMatrixError("channel covariance is rank deficient");
    return eig.eigenvectors() * lam.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

IcaDecomposition infomax_decompose(const Recording& x_short, std::uint64_t seed, const IcaOptions& options,
                                   IndexMap index_map)
{
    const Index N = x_short.channel_count();
    const Index K = x_short.sample_count();
    if (N < 1) throw EmptyDataError("no channels to decompose");
    if (static_cast<double>(K) <= options.min_samples_factor * static_cast<double>(N))
        throw InsufficientDataError("ICA needs more than " + std::to_string(options.min_samples_factor) +
                                    " x channels samples, got " + std::to_string(K));
    if (options.block < 1 || options.max_sweeps < 1) throw ArgumentError("ICA block and sweep count must be positive");

    const Eigen::MatrixXd sphere = whitening_matrix(x_short.data);
    const Eigen::MatrixXd xw = sphere * centered(x_short.data);

    IcaDecomposition out;
    out.fs = x_short.fs;
    out.seed = seed;
    out.index_map = index_map.ranges().empty() ? IndexMap::identity(K) : std::move(index_map);

    std::mt19937_64 rng(seed);
    Eigen::MatrixXd W = Eigen::MatrixXd::Identity(N, N);

    if (N > 1) {
        double lrate = options.learning_rate > 0 ? options.learning_rate : 0.00065 / std::log(static_cast<double>(N));
        const Index B = std::min<Index>(options.block, K);
        const Index nblocks = K / B;
        const Eigen::MatrixXd BI = static_cast<double>(B) * Eigen::MatrixXd::Identity(N, N);

        std::vector<Index> perm(static_cast<std::size_t>(K));
        Eigen::MatrixXd xb(N, B);
        Eigen::MatrixXd old_W = W;
        Eigen::MatrixXd old_delta = Eigen::MatrixXd::Zero(N, N);
        Eigen::VectorXd signs = Eigen::VectorXd::Ones(N);
        double old_change = 0.0;
        int step = 0;

        while (step < options.max_sweeps) {
            std::iota(perm.begin(), perm.end(), Index{0});
            std::shuffle(perm.begin(), perm.end(), rng);
            bool blew_up = false;
            if (options.extended) signs = kurtosis_signs(W, xw, rng);

            for (Index b = 0; b < nblocks && !blew_up; ++b) {
                for (Index j = 0; j < B; ++j) xb.col(j) = xw.col(perm[static_cast<std::size_t>(b * B + j)]);
                const Eigen::MatrixXd u = W * xb;
                Eigen::MatrixXd grad;
                if (options.extended) {
                    const Eigen::MatrixXd t = signs.asDiagonal() * u.array().tanh().matrix();
                    grad = BI - t * u.transpose() - u * u.transpose();
                } else {
                    const Eigen::MatrixXd y = (1.0 - 2.0 / (1.0 + (-u.array()).exp())).matrix();
                    grad = BI + y * u.transpose();
                }
                W += lrate * grad * W;
                if (!W.allFinite() || W.cwiseAbs().maxCoeff() > kBlowup) blew_up = true;
            }

            if (blew_up) {
                lrate *= kRestartFactor;
                if (lrate < kMinLrate) break;
                W.setIdentity();
                old_W = W;
                old_delta.setZero();
                old_change = 0.0;
                signs.setOnes();
                step = 0;
                continue;
            }

            const Eigen::MatrixXd delta = W - old_W;
            const double change = delta.squaredNorm();
            ++step;
            if (step > 2 && old_change > 0 && change > 0) {
                const double cosang = (delta.array() * old_delta.array()).sum() / std::sqrt(change * old_change);
                const double angle = std::acos(std::clamp(cosang, -1.0, 1.0)) * 180.0 / M_PI;
                if (angle > kAnnealDegrees) lrate *= kAnnealFactor;
            }
            old_W = W;
            old_delta = delta;
            old_change = change;
            if (change < options.tolerance) {
                out.converged = true;
                break;
            }
            if (lrate < kMinLrate) break;
        }
        out.iterations = step;
    } else {
        out.iterations = 0;
        out.converged = true;
    }

    Eigen::MatrixXd unmix = W * sphere;
    Eigen::MatrixXd A = unmix.inverse();

    // Order components by back-projected variance and fix each column's sign
    // so that its largest-magnitude entry is positive.
    const Eigen::MatrixXd s_c = unmix * centered(x_short.data);
    std::vector<double> power(static_cast<std::size_t>(N));
    for (Index i = 0; i < N; ++i)
        power[static_cast<std::size_t>(i)] = A.col(i).squaredNorm() * s_c.row(i).squaredNorm();
    std::vector<Index> order(static_cast<std::size_t>(N));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return power[static_cast<std::size_t>(a)] > power[static_cast<std::size_t>(b)];
    });

    out.A.resize(N, N);
    out.unmixing.resize(N, N);
    for (Index i = 0; i < N; ++i) {
        const Index src = order[static_cast<std::size_t>(i)];
        Index arg = 0;
        A.col(src).cwiseAbs().maxCoeff(&arg);
        const double sgn = A(arg, src) < 0 ? -1.0 : 1.0;
        out.A.col(i) = sgn * A.col(src);
        out.unmixing.row(i) = sgn * unmix.row(src);
    }
    out.S_short = out.unmixing * x_short.data;
    return out;
}

Matrix project_full(const IcaDecomposition& decomp, const Recording& x_full)
{
    const Index N = decomp.components();
    if (x_full.channel_count() != N)
        throw ArgumentError("recording has " + std::to_string(x_full.channel_count()) + " channels, decomposition " +
                            std::to_string(N));
    Eigen::FullPivLU<Eigen::MatrixXd> lu(decomp.A);
    if (!lu.isInvertible()) throw SingularMatrixError("mixing matrix is singular");
    // The stored unmixing matrix is the exact inverse used for S_short, so the
    // kept samples reproduce S_short bit for bit.
    const Eigen::MatrixXd check = decomp.A * decomp.unmixing;
    if (decomp.unmixing.size() == decomp.A.size() &&
        (check - Eigen::MatrixXd::Identity(N, N)).cwiseAbs().maxCoeff() < 1e-6)
        return decomp.unmixing * x_full.data;
    return lu.inverse() * x_full.data;
}

Recording reconstruct_without(const IcaDecomposition& decomp, const Matrix& S, const std::set<Index>& removed,
                              const Recording& like)
{
    const Index N = decomp.components();
    for (Index r : removed)
        if (r < 0 || r >= N) throw ArgumentError("IC index " + std::to_string(r) + " out of range");
    if (S.rows() != N) throw ArgumentError("source matrix has the wrong number of rows");
    if (like.channel_count() != decomp.A.rows() || like.sample_count() != S.cols())
        throw ArgumentError("template recording does not match the source matrix shape");
    Eigen::MatrixXd Ap = decomp.A;
    for (Index r : removed) Ap.col(r).setZero();
    return like.with_data(Ap * S);
}

double amari_distance(const Eigen::MatrixXd& P)
{
    const Index n = P.rows();
    if (n != P.cols() || n == 0) throw ArgumentError("Amari distance needs a square matrix");
    if (n == 1) return 0.0;
    const Eigen::MatrixXd a = P.cwiseAbs();
    double total = 0.0;
    for (Index i = 0; i < n; ++i) total += a.row(i).sum() / a.row(i).maxCoeff() - 1.0;
    for (Index j = 0; j < n; ++j) total += a.col(j).sum() / a.col(j).maxCoeff() - 1.0;
    return total / (2.0 * static_cast<double>(n) * static_cast<double>(n - 1));
}

} // namespace appear
