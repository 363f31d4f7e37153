#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "partiallab/core.hpp"
#include "partiallab/finite_diff.hpp"
#include "partiallab/rng.hpp"

using namespace partiallab;

TEST_CASE("matrix is row major") {
    Matrix m(2, 3);
    m(0, 0) = 1.0;
    m(1, 2) = 7.0;
    REQUIRE(m.data[0] == 1.0);
    REQUIRE(m.data[5] == 7.0);
    REQUIRE(m.row(1)[2] == 7.0);
    Matrix n = m;
    REQUIRE(m == n);
    n(0, 1) = -2.0;
    REQUIRE_FALSE(m == n);
}

TEST_CASE("label matrix holds signed ints") {
    LabelMatrix y(2, 2);
    REQUIRE(y(0, 0) == 0);
    y(1, 0) = -1;
    y(1, 1) = 1;
    REQUIRE(y.row(1)[0] == -1);
    REQUIRE(y.row(1)[1] == 1);
}

TEST_CASE("shape and finiteness guards") {
    Matrix a(2, 3), b(3, 2);
    REQUIRE_THROWS_AS(require_shape(a.rows == 3 && a.cols == 2, "a dims"), std::invalid_argument);
    REQUIRE_NOTHROW(require_shape(a.rows == 2 && a.cols == 3, "a dims"));
    a(0, 0) = std::nan("");
    REQUIRE_FALSE(all_finite(a));
    REQUIRE_THROWS_AS(require_finite(a, "a"), std::runtime_error);
    REQUIRE(all_finite(b));
}

TEST_CASE("stable scalar math") {
    REQUIRE(sigmoid(0.0) == 0.5);
    REQUIRE(sigmoid(1000.0) == 1.0);
    REQUIRE(sigmoid(-1000.0) == Catch::Approx(0.0).margin(1e-300));
    REQUIRE(std::isfinite(log_sigmoid(-1000.0)));
    REQUIRE(log_sigmoid(-1000.0) == Catch::Approx(-1000.0));
    REQUIRE(log_sigmoid(0.0) == Catch::Approx(-std::log(2.0)));
    REQUIRE(softplus(0.0) == Catch::Approx(std::log(2.0)));
    REQUIRE(softplus(800.0) == 800.0);
    REQUIRE(softplus(-800.0) == Catch::Approx(0.0).margin(1e-300));
    REQUIRE(relu(-3.0) == 0.0);
    REQUIRE(relu(2.5) == 2.5);

    for (double x : {-20.0, -3.0, -0.1, 0.0, 0.7, 4.0, 30.0}) {
        REQUIRE(sigmoid(x) == Catch::Approx(1.0 / (1.0 + std::exp(-x))).epsilon(1e-14));
        REQUIRE(softplus(x) == Catch::Approx(std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0))
                                   .epsilon(1e-14));
    }
}

TEST_CASE("splitmix64 reference sequence") {
    Rng rng(0);
    REQUIRE(rng.next_u64() == 0xE220A8397B1DCDAFull);
    REQUIRE(rng.next_u64() == 0x6E789E6AA1B965F4ull);
    REQUIRE(rng.next_u64() == 0x06C45D188009454Full);
}

TEST_CASE("rng streams are deterministic and seed sensitive") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
    bool differs = false;
    Rng a2(42);
    for (int i = 0; i < 100; ++i)
        if (a2.next_u64() != c.next_u64()) differs = true;
    REQUIRE(differs);
    REQUIRE(mix_seed(5, 1) != mix_seed(5, 2));
    REQUIRE(mix_seed(5, 1) == mix_seed(5, 1));
}

TEST_CASE("uniform and normal draws") {
    Rng rng(7);
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < 20000; ++i) {
        double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sumsq += u * u;
    }
    REQUIRE(sum / 20000 == Catch::Approx(0.5).margin(0.01));
    REQUIRE(sumsq / 20000 - 0.25 == Catch::Approx(1.0 / 12).margin(0.01));

    Rng g(9);
    double gs = 0.0, gss = 0.0;
    for (int i = 0; i < 20000; ++i) {
        double v = g.normal();
        gs += v;
        gss += v * v;
    }
    REQUIRE(gs / 20000 == Catch::Approx(0.0).margin(0.03));
    REQUIRE(gss / 20000 == Catch::Approx(1.0).margin(0.05));

    Rng lo(3);
    double x = lo.uniform(-2.0, 4.0);
    REQUIRE(x >= -2.0);
    REQUIRE(x < 4.0);
    for (int i = 0; i < 100; ++i) REQUIRE(lo.below(7) < 7);
}

TEST_CASE("shuffle is a deterministic permutation") {
    std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    Rng r1(11), r2(11);
    auto w = v;
    r1.shuffle(v);
    r2.shuffle(w);
    REQUIRE(v == w);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    REQUIRE(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
}

TEST_CASE("dense kernels match hand loops") {
    Matrix W(2, 3);
    W.data = {1, 2, 3, 4, 5, 6};
    std::vector<double> x{1, -1, 2}, b{0.5, -0.5};
    std::vector<double> out(2);
    affine(W, b, x, out);
    REQUIRE(out[0] == Catch::Approx(1 - 2 + 6 + 0.5));
    REQUIRE(out[1] == Catch::Approx(4 - 5 + 12 - 0.5));

    std::vector<double> acc{1.0, 1.0};
    matvec_add(W, x, acc);
    REQUIRE(acc[0] == Catch::Approx(6.0));
    REQUIRE(acc[1] == Catch::Approx(12.0));

    std::vector<double> d{2.0, -1.0}, back(3, 0.0);
    tmatvec_add(W, d, back);
    REQUIRE(back[0] == Catch::Approx(2 * 1 - 4));
    REQUIRE(back[1] == Catch::Approx(2 * 2 - 5));
    REQUIRE(back[2] == Catch::Approx(2 * 3 - 6));

    Matrix G(2, 3);
    outer_add(G, d, x);
    REQUIRE(G(0, 0) == Catch::Approx(2.0));
    REQUIRE(G(0, 2) == Catch::Approx(4.0));
    REQUIRE(G(1, 1) == Catch::Approx(1.0));

    std::vector<double> y{1, 1, 1};
    axpy(2.0, x, y);
    REQUIRE(y == std::vector<double>{3, -1, 5});
}

TEST_CASE("central differences recover simple gradients") {
    std::vector<double> x{1.0, 2.0};
    auto f = [](std::span<const double> v) { return v[0] * v[0] + v[1] * v[1]; };
    auto g = finite_diff(f, x);
    REQUIRE(g[0] == Catch::Approx(2.0).margin(1e-8));
    REQUIRE(g[1] == Catch::Approx(4.0).margin(1e-8));
    REQUIRE(x[0] == 1.0);
    REQUIRE(x[1] == 2.0);

    auto c = finite_diff([](std::span<const double>) { return 3.0; }, x);
    REQUIRE(c[0] == 0.0);
    REQUIRE(c[1] == 0.0);
}

TEST_CASE("gradient comparison is scale free") {
    std::vector<double> a{1.0, 2.0}, b{1.0, 2.0};
    REQUIRE(grad_rel_err(a, b) == 0.0);
    std::vector<double> z1(3, 0.0), z2(3, 0.0);
    REQUIRE(grad_rel_err(z1, z2) == 0.0);
    std::vector<double> c{1.0, 0.0}, d{0.0, 1.0};
    REQUIRE(grad_rel_err(c, d) == Catch::Approx(std::sqrt(2.0) / 2.0));
}
