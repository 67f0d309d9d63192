#include <catch2/catch.hpp>

#include <sstream>

#include "swlab/clifford.hpp"
#include "swlab/cutoff.hpp"
#include "swlab/norms.hpp"
#include "swlab/rng.hpp"
#include "swlab/stencil.hpp"
#include "swlab/swf1.hpp"

using namespace swlab;

TEST_CASE("grid construction and covered radius") {
    Grid2 g(128, 128, 0.15);
    CHECK(g.covered_radius() == Approx(9.6));
    CHECK(g.size() == 128u * 128u);

    Grid2 gmin(16, 16, 1.0);
    CHECK(gmin.covered_radius() == Approx(8.0));

    CHECK_THROWS_AS(Grid2(8, 8, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Grid2(64, 64, std::nan("")), std::invalid_argument);
    CHECK_THROWS_AS(Grid2(64, 64, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(Grid3(32, 32, 4, 0.5), std::invalid_argument);
}

TEST_CASE("node coordinates are reproducible and centered") {
    Grid2 g(32, 32, 0.5, complexd(1.0, -2.0));
    Grid2 g2(32, 32, 0.5, complexd(1.0, -2.0));
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            CHECK(g.z(i, j) == g2.z(i, j));
        }
    // Symmetric placement about the center.
    CHECK(g.x1(0) + g.x1(g.nx() - 1) == Approx(2.0));
    CHECK(g.x2(0) + g.x2(g.ny() - 1) == Approx(-4.0));
}

TEST_CASE("central differences are exact on quadratics at interior nodes") {
    Grid2 g(32, 32, 0.25);
    ScalarField2 f(g);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const double x = g.x1(i), y = g.x2(j);
            f[g.idx(i, j)] = 2.0 + 3.0 * x - 1.5 * y + 0.25 * x * x + 0.75 * x * y - 2.0 * y * y;
        }
    for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i) {
            const double x = g.x1(i), y = g.x2(j);
            CHECK(dx1(f, i, j) == Approx(3.0 + 0.5 * x + 0.75 * y).margin(1e-11));
            CHECK(dx2(f, i, j) == Approx(-1.5 + 0.75 * x - 4.0 * y).margin(1e-11));
            CHECK(laplacian(f, i, j) == Approx(0.5 - 4.0).margin(1e-10));
        }
}

TEST_CASE("cutoff plateaus and smoothness") {
    const double R = 3.0;
    auto chi = chi_cutoff(R);
    CHECK(chi(0.0) == 1.0);
    CHECK(chi(R) == 1.0);
    CHECK(chi(3.0 * R) == 0.0);
    CHECK(chi(2.0 * R) == 0.0);

    auto lam = lambda_cutoff(1.5);
    CHECK(lam(2.0 * 1.5) == 1.0);
    CHECK(lam(1.5) == 1.0);
    CHECK(lam(-1.5) == 0.0);

    auto lamp = lambda_prime_cutoff(R);
    CHECK(lamp(0.5 * R) == 1.0);
    CHECK(lamp(-2.5 * R) == 0.0);
    CHECK(lamp(1.7) == lamp(-1.7));

    // C^1: finite-difference derivative bounded by C/scale with C of order 1.
    for (auto profile : {chi, lam, lamp}) {
        double max_fd = 0.0;
        for (double x = -10.0; x <= 10.0; x += 1e-3) {
            const double fd = (profile(x + 5e-4) - profile(x - 5e-4)) / 1e-3;
            max_fd = std::max(max_fd, std::abs(fd));
            CHECK(profile(x) >= 0.0);
            CHECK(profile(x) <= 1.0);
            CHECK(std::abs(fd - profile.deriv(x)) < 1e-5);
        }
        CHECK(max_fd <= 2.0 / profile.scale);
    }
}

TEST_CASE("weight function plateaus, growth, and gradient bound") {
    WeightSpec spec(1.25, 4.0);
    CHECK(spec.sigma(0.0) == 1.0);
    CHECK(spec.sigma(4.0) == 1.0);
    CHECK(spec.sigma(-3.9) == 1.0);
    CHECK(spec.sigma(8.0) == Approx(2.0));
    CHECK(spec.sigma(-16.0) == Approx(4.0));
    for (double f = -40.0; f <= 40.0; f += 0.01) {
        CHECK(spec.sigma(f) >= 1.0);
        CHECK(std::abs(spec.sigma_deriv(f)) <= 3.0 / spec.R);
    }
    CHECK_THROWS_AS(WeightSpec(1.6, 4.0), std::invalid_argument);
}

TEST_CASE("weighted norm reduces to the unweighted norm") {
    Grid3 g(24, 24, 12, 0.5);
    ComplexField3 f(g);
    Rng rng(17);
    for (auto& v : f.values()) v = complexd(rng.normal(), rng.normal());

    WeightSpec spec(0.0, 2.0, WeightAxis::X3);
    WeightSpec flat(0.0, 1.0, WeightAxis::X3);
    for (int k = 0; k <= 2; ++k) {
        CHECK(weighted_norm(f, spec, NormP::L2, k) ==
              Approx(weighted_norm(f, flat, NormP::L2, k)));
    }
    CHECK(weighted_norm(f, spec, NormP::LInf, 0) == Approx(sup_norm(f)));
}

TEST_CASE("weighted norm is the unweighted norm for fields supported in the plateau") {
    Grid3 g(16, 16, 24, 0.5);  // x3 spans [-6, 6]
    ScalarField3 f(g);
    WeightSpec spec(1.25, 4.0, WeightAxis::X3);
    Rng rng(3);
    for (int k = 0; k < g.nz(); ++k)
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i)
                if (std::abs(g.x3(k)) <= 3.0) f[g.idx(i, j, k)] = rng.normal();
    WeightSpec flat(0.0, 4.0, WeightAxis::X3);
    CHECK(weighted_norm(f, spec, NormP::L2, 0) == weighted_norm(f, flat, NormP::L2, 0));
}

TEST_CASE("weighted norm of a unit bump at |f| = 4R") {
    // Oracle: direct quadrature of sigma^{2 eps} over the bump reduces to
    // h * sigma(4R)^eps for a single interior node of value 1.
    Grid3 g(16, 16, 48, 0.5);  // x3 spans [-12, 12]
    const double R = 2.5;
    WeightSpec spec(1.25, R, WeightAxis::X3);
    ScalarField3 f(g);
    int hit = -1;
    for (int k = 0; k < g.nz(); ++k)
        if (std::abs(g.x3(k) - 4.0 * R) < 0.3) hit = k;
    REQUIRE(hit >= 0);
    f[g.idx(8, 8, hit)] = 1.0;
    const double expected =
        std::sqrt(trapezoid_weight(g, 8, 8, hit)) * std::pow(spec.sigma(g.x3(hit)), 1.25);
    CHECK(weighted_norm(f, spec, NormP::L2, 0) == Approx(expected).epsilon(1e-12));
}

TEST_CASE("weighted norm monotone in epsilon") {
    Grid3 g(16, 16, 32, 0.5);
    ScalarField3 f(g);
    Rng rng(11);
    for (auto& v : f.values()) v = rng.normal();
    const double n1 = weighted_norm(f, WeightSpec(0.6, 2.0, WeightAxis::X3), NormP::L2, 1);
    const double n2 = weighted_norm(f, WeightSpec(1.1, 2.0, WeightAxis::X3), NormP::L2, 1);
    CHECK(n1 <= n2);
}

TEST_CASE("clifford relations and the rho conventions") {
    for (int a = 1; a <= 3; ++a)
        for (int b = 1; b <= 3; ++b) {
            Mat2 anti = matmul(gamma(a), gamma(b)) + matmul(gamma(b), gamma(a));
            Mat2 expect{};
            if (a == b) expect = {complexd(-2, 0), 0, 0, complexd(-2, 0)};
            CHECK(std::sqrt(frobenius_norm_sq(anti - expect)) < 1e-14);
        }

    // rho(dx3) = gamma3 = diag(i, -i).
    Mat2 g3 = clifford_rho({0.0, 0.0, 1.0});
    CHECK(g3[0] == complexd(0, 1));
    CHECK(g3[3] == complexd(0, -1));

    // rho(dx1)^2 = -I.
    Mat2 sq = matmul(clifford_rho({1.0, 0.0, 0.0}), clifford_rho({1.0, 0.0, 0.0}));
    CHECK(std::sqrt(frobenius_norm_sq(sq - Mat2{complexd(-1, 0), 0, 0, complexd(-1, 0)})) < 1e-14);

    // rho(dx1 ^ dx2) = rho(dx3).
    Mat2 diff = clifford_rho_2form({1.0, 0.0, 0.0}) - clifford_rho({0.0, 0.0, 1.0});
    CHECK(frobenius_norm_sq(diff) == 0.0);

    // Linearity in components.
    Rng rng(5);
    std::array<complexd, 3> u, v;
    for (int j = 0; j < 3; ++j) {
        u[j] = complexd(rng.normal(), rng.normal());
        v[j] = complexd(rng.normal(), rng.normal());
    }
    Mat2 lhs = clifford_rho({u[0] + v[0], u[1] + v[1], u[2] + v[2]});
    Mat2 rhs = clifford_rho(u) + clifford_rho(v);
    CHECK(std::sqrt(frobenius_norm_sq(lhs - rhs)) < 1e-13);
}

TEST_CASE("sigma map: traceless, symmetric, and the basis value") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        std::array<complexd, 2> psi{complexd(rng.normal(), rng.normal()),
                                    complexd(rng.normal(), rng.normal())};
        Mat2 s = sigma_map(psi, psi);
        CHECK(std::abs(trace(s)) < 1e-14);
        // Hermitian-type structure: i * sigma is hermitian.
        Mat2 herm = complexd(0, -1) * s;
        CHECK(std::abs(herm[1] - std::conj(herm[2])) < 1e-14);
    }
    CHECK(std::sqrt(frobenius_norm_sq(sigma_map({0.0, 0.0}, {0.0, 0.0}))) == 0.0);

    // sigma((1,0),(1,0)) = (1/2) gamma3 under the recorded sign convention.
    Mat2 s = sigma_map({1.0, 0.0}, {1.0, 0.0});
    Mat2 expect = complexd(0.5, 0.0) * kGamma3;
    CHECK(std::sqrt(frobenius_norm_sq(s - expect)) < 1e-15);
}

TEST_CASE("SWF1 round trip is bit exact") {
    Grid2 g(16, 16, 0.7071067811865476, complexd(0.1, -0.3));
    FieldBundle2 b{g, 3, {}};
    Rng rng(99);
    b.data.resize(g.size() * 3);
    for (auto& v : b.data) v = rng.normal() * std::pow(10.0, rng.uniform(-12, 12));
    std::stringstream ss;
    write_swf1(ss, b);
    FieldBundle2 back = read_swf1_2d(ss);
    REQUIRE(back.grid == g);
    REQUIRE(back.components == 3);
    REQUIRE(back.data.size() == b.data.size());
    for (std::size_t i = 0; i < b.data.size(); ++i) {
        CHECK(std::memcmp(&back.data[i], &b.data[i], sizeof(double)) == 0);
    }

    Grid3 g3(16, 16, 8, 0.55);
    FieldBundle3 b3{g3, 2, {}};
    b3.data.resize(g3.size() * 2);
    for (auto& v : b3.data) v = rng.normal();
    std::stringstream s3;
    write_swf1(s3, b3);
    FieldBundle3 back3 = read_swf1_3d(s3);
    REQUIRE(back3.grid == g3);
    for (std::size_t i = 0; i < b3.data.size(); ++i) CHECK(back3.data[i] == b3.data[i]);
}

TEST_CASE("SWF1 structured errors") {
    std::stringstream bad1("SWF2\nkind grid2\n");
    CHECK_THROWS_WITH(read_swf1_2d(bad1), Catch::Contains("magic"));

    std::stringstream bad2("SWF1\nkind grid4\n");
    CHECK_THROWS_WITH(read_swf1_2d(bad2), Catch::Contains("kind"));

    // Truncated payload.
    Grid2 g(16, 16, 0.5);
    FieldBundle2 b{g, 1, std::vector<double>(g.size(), 1.0)};
    std::stringstream ss;
    write_swf1(ss, b);
    std::string full = ss.str();
    std::stringstream cut(full.substr(0, full.size() - 32));
    CHECK_THROWS_WITH(read_swf1_2d(cut), Catch::Contains("payload"));
}
