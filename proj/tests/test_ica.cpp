#include <doctest.h>

#include "appear/errors.hpp"
#include "appear/ica.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace appear;

namespace {

Recording make_rec(const Matrix& data, double fs = 250.0)
{
    Recording r;
    r.data = data;
    r.fs = fs;
    for (Index c = 0; c < data.rows(); ++c) r.channels.push_back({"C" + std::to_string(c), {}, false});
    return r;
}

double corr(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b)
{
    const Eigen::RowVectorXd x = a.array() - a.mean();
    const Eigen::RowVectorXd y = b.array() - b.mean();
    return x.dot(y) / std::sqrt(x.squaredNorm() * y.squaredNorm());
}

// Four sources with mixed kurtosis: sparse pulses, Laplacian, uniform, sine.
Matrix four_sources(std::mt19937_64& rng, Index K)
{
    Matrix s(4, K);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::exponential_distribution<double> ex(1.0);
    std::uniform_real_distribution<double> ph(0.0, 2 * M_PI);
    const double phase = ph(rng);
    for (Index k = 0; k < K; ++k) {
        s(0, k) = (k % 97 < 4) ? 5.0 : 0.0;
        s(1, k) = (u(rng) > 0 ? 1.0 : -1.0) * ex(rng);
        s(2, k) = u(rng);
        s(3, k) = std::sin(2 * M_PI * 0.0137 * static_cast<double>(k) + phase);
    }
    return s;
}

Eigen::MatrixXd random_mixing(std::mt19937_64& rng, Index n)
{
    std::normal_distribution<double> g;
    Eigen::MatrixXd A(n, n);
    for (;;) {
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j) A(i, j) = g(rng);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
        const auto sv = svd.singularValues();
        if (sv(n - 1) > 0.1 * sv(0)) return A;
    }
}

IcaDecomposition manual_decomp(const Eigen::MatrixXd& A, const Matrix& x)
{
    IcaDecomposition d;
    d.A = A;
    d.unmixing = A.inverse();
    d.S_short = d.unmixing * x;
    d.index_map = IndexMap::identity(x.cols());
    d.fs = 250.0;
    return d;
}

} // namespace

TEST_CASE("whitened covariance is the identity")
{
    std::mt19937_64 rng(3);
    const Matrix s = four_sources(rng, 4000);
    const Matrix x = random_mixing(rng, 4) * s;
    const Eigen::MatrixXd P = whitening_matrix(x);
    Eigen::MatrixXd c = x;
    c.colwise() -= c.rowwise().mean();
    const Eigen::MatrixXd z = P * c;
    const Eigen::MatrixXd cov = z * z.transpose() / static_cast<double>(x.cols() - 1);
    CHECK((cov - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("rank deficient data cannot be whitened")
{
    Matrix x(2, 500);
    for (Index k = 0; k < 500; ++k) {
        x(0, k) = std::sin(0.1 * static_cast<double>(k));
        x(1, k) = 2.0 * x(0, k);
    }
    CHECK_THROWS_AS(whitening_matrix(x), SingularMatrixError);
    CHECK_THROWS_AS(infomax_decompose(make_rec(x), 1), SingularMatrixError);
}

TEST_CASE("too few samples per channel")
{
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    Matrix x(4, 80);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    CHECK_THROWS_AS(infomax_decompose(make_rec(x), 1), InsufficientDataError);
    Matrix y(4, 81);
    for (Index i = 0; i < y.size(); ++i) y.data()[i] = g(rng);
    CHECK_NOTHROW(infomax_decompose(make_rec(y), 1));
}

TEST_CASE("two-source unmixing recovers pulse train and Laplacian noise")
{
    const Index K = 10000;
    std::mt19937_64 rng(11);
    std::exponential_distribution<double> ex(1.0);
    std::bernoulli_distribution coin(0.5);
    Matrix s(2, K);
    for (Index k = 0; k < K; ++k) {
        const double t = static_cast<double>(k % 250) - 20.0;
        s(0, k) = std::exp(-t * t / 18.0);
        s(1, k) = (coin(rng) ? 1.0 : -1.0) * ex(rng);
    }
    Eigen::MatrixXd M(2, 2);
    M << 1.0, 0.6, 0.4, 1.0;
    const auto d = infomax_decompose(make_rec(M * s), 5);

    const double c00 = std::abs(corr(d.S_short.row(0), s.row(0)));
    const double c01 = std::abs(corr(d.S_short.row(0), s.row(1)));
    const double c10 = std::abs(corr(d.S_short.row(1), s.row(0)));
    const double c11 = std::abs(corr(d.S_short.row(1), s.row(1)));
    const double straight = std::min(c00, c11), crossed = std::min(c01, c10);
    CHECK(std::max(straight, crossed) >= 0.95);
    CHECK((d.A * d.unmixing - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("single channel decomposition is a scaling")
{
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    Matrix x(1, 200);
    for (Index k = 0; k < 200; ++k) x(0, k) = 3.0 * g(rng) + 1.0;
    const auto d = infomax_decompose(make_rec(x), 1);
    REQUIRE(d.components() == 1);
    const double c = d.A(0, 0);
    CHECK(c != 0.0);
    CHECK((d.S_short - x / c).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(d.converged);
}

TEST_CASE("decomposition is deterministic for a seed")
{
    std::mt19937_64 rng(8);
    const Matrix x = random_mixing(rng, 4) * four_sources(rng, 3000);
    const auto a = infomax_decompose(make_rec(x), 42);
    const auto b = infomax_decompose(make_rec(x), 42);
    CHECK(a.A == b.A);
    CHECK(a.S_short == b.S_short);
    CHECK(a.iterations == b.iterations);
    CHECK(a.seed == 42);
}

TEST_CASE("components are ordered by back-projected variance")
{
    std::mt19937_64 rng(4);
    const Matrix x = random_mixing(rng, 4) * four_sources(rng, 4000);
    const auto d = infomax_decompose(make_rec(x), 1);
    double prev = 1e300;
    for (Index i = 0; i < 4; ++i) {
        const Eigen::RowVectorXd s = d.S_short.row(i).array() - d.S_short.row(i).mean();
        const double p = d.A.col(i).squaredNorm() * s.squaredNorm();
        CHECK(p <= prev * (1 + 1e-12));
        prev = p;
    }
}

TEST_CASE("Amari distance on four-source problems")
{
    std::vector<double> dist;
    for (int seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(1000 + seed));
        const Matrix s = four_sources(rng, 5000);
        const Eigen::MatrixXd M = random_mixing(rng, 4);
        const auto d = infomax_decompose(make_rec(M * s), static_cast<std::uint64_t>(seed));
        dist.push_back(amari_distance(d.unmixing * M));
    }
    std::nth_element(dist.begin(), dist.begin() + 50, dist.end());
    MESSAGE("median Amari distance " << dist[50]);
    CHECK(dist[50] < 0.1);
}

TEST_CASE("Amari distance of scaled permutations is zero")
{
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(3, 3);
    P(0, 2) = -2.0;
    P(1, 0) = 0.5;
    P(2, 1) = 7.0;
    CHECK(amari_distance(P) == doctest::Approx(0.0));
    CHECK(amari_distance(Eigen::MatrixXd::Ones(3, 3)) == doctest::Approx(1.0));
}

TEST_CASE("project_full with known mixing")
{
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    Matrix x(3, 100);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    const auto rec = make_rec(x);
    CHECK((project_full(manual_decomp(Eigen::MatrixXd::Identity(3, 3), x), rec) - x).cwiseAbs().maxCoeff() == 0.0);
    const Matrix half = project_full(manual_decomp(2.0 * Eigen::MatrixXd::Identity(3, 3), x), rec);
    CHECK((half - x / 2.0).cwiseAbs().maxCoeff() < 1e-15);

    IcaDecomposition sing = manual_decomp(Eigen::MatrixXd::Identity(3, 3), x);
    sing.A(2, 2) = 0.0;
    CHECK_THROWS_AS(project_full(sing, rec), SingularMatrixError);
    CHECK_THROWS_AS(project_full(sing, make_rec(x.topRows(2))), ArgumentError);
}

TEST_CASE("full-session projection restricted to kept samples equals S_short")
{
    std::mt19937_64 rng(12);
    const Matrix x = random_mixing(rng, 4) * four_sources(rng, 6000);
    const Recording full = make_rec(x);
    const IntervalSet bad = IntervalSet::merged({{500, 900}, {3000, 3500}}, 6000);
    auto [short_rec, map] = excise_intervals(full, bad);
    const auto d = infomax_decompose(short_rec, 3, {}, map);
    const Matrix S = project_full(d, full);
    double worst = 0.0;
    for (Index k = 0; k < short_rec.sample_count(); ++k)
        worst = std::max(worst, (S.col(map.to_full(k)) - d.S_short.col(k)).cwiseAbs().maxCoeff());
    CHECK(worst <= 1e-8 * d.S_short.cwiseAbs().maxCoeff());

    const Recording back = reconstruct_without(d, S, {}, full);
    CHECK((back.data - x).norm() <= 1e-6 * x.norm());
}

TEST_CASE("reconstruction round trip for random full-rank mixing")
{
    for (int seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
        std::normal_distribution<double> g;
        const Eigen::MatrixXd A = random_mixing(rng, 5);
        Matrix x(5, 300);
        for (Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
        const auto d = manual_decomp(A, x);
        const Recording rec = make_rec(x);
        const Matrix S = project_full(d, rec);
        const Recording back = reconstruct_without(d, S, {}, rec);
        CHECK((back.data - x).norm() <= 1e-8 * x.norm());
        CHECK(back.fs == rec.fs);
        CHECK(back.channels == rec.channels);

        const Recording none = reconstruct_without(d, S, {0, 1, 2, 3, 4}, rec);
        CHECK(none.data.cwiseAbs().maxCoeff() == 0.0);

        for (Index j = 0; j < 5; ++j) {
            const Recording without = reconstruct_without(d, S, {j}, rec);
            const Matrix direct = x - A.col(j) * S.row(j);
            CHECK((without.data - direct).cwiseAbs().maxCoeff() <= 1e-9 * x.cwiseAbs().maxCoeff());
        }
    }
}

TEST_CASE("removing one of three known sources")
{
    std::mt19937_64 rng(21);
    std::normal_distribution<double> g;
    Matrix s(3, 400);
    for (Index i = 0; i < s.size(); ++i) s.data()[i] = g(rng);
    const Eigen::MatrixXd A = random_mixing(rng, 3);
    const Matrix x = A * s;
    const auto d = manual_decomp(A, x);
    const Recording rec = make_rec(x);
    const Matrix S = project_full(d, rec);
    const Recording out = reconstruct_without(d, S, {2}, rec);

    Matrix s_zero = s;
    s_zero.row(2).setZero();
    const Matrix oracle = A.col(0) * s.row(0) + A.col(1) * s.row(1);
    CHECK((out.data - A * s_zero).norm() <= 1e-8 * x.norm());
    CHECK((out.data - oracle).norm() <= 1e-8 * x.norm());

    CHECK_THROWS_AS(reconstruct_without(d, S, {3}, rec), ArgumentError);
    CHECK_THROWS_AS(reconstruct_without(d, S, {-1}, rec), ArgumentError);
}
