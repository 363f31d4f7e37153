#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "partiallab/finite_diff.hpp"
#include "partiallab/gnn.hpp"
#include "partiallab/rng.hpp"

using namespace partiallab;

namespace {

// Conjugates node-space parameters by the permutation pi, where row v of the
// permuted system corresponds to row pi[v] of the original.
Matrix permute_mat(const Matrix& M, const std::vector<std::size_t>& pi) {
    Matrix out(M.rows, M.cols);
    for (std::size_t i = 0; i < M.rows; ++i)
        for (std::size_t j = 0; j < M.cols; ++j) out(i, j) = M(pi[i], pi[j]);
    return out;
}

std::vector<double> permute_vec(const std::vector<double>& v, const std::vector<std::size_t>& pi) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[pi[i]];
    return out;
}

GnnParams conjugate(const GnnParams& p, const std::vector<std::size_t>& pi) {
    GnnParams q = p;
    q.fm.W = permute_mat(p.fm.W, pi);
    q.fm.b = permute_vec(p.fm.b, pi);
    q.gru.Wz = permute_mat(p.gru.Wz, pi);
    q.gru.Uz = permute_mat(p.gru.Uz, pi);
    q.gru.Wr = permute_mat(p.gru.Wr, pi);
    q.gru.Ur = permute_mat(p.gru.Ur, pi);
    q.gru.Wh = permute_mat(p.gru.Wh, pi);
    q.gru.Uh = permute_mat(p.gru.Uh, pi);
    q.gru.bz = permute_vec(p.gru.bz, pi);
    q.gru.br = permute_vec(p.gru.br, pi);
    q.gru.bh = permute_vec(p.gru.bh, pi);
    return q;
}

}  // namespace

TEST_CASE("hidden state initializes to the score diagonal") {
    std::vector<double> x{1.0, 2.0, 3.0};
    Matrix H = init_hidden(x);
    REQUIRE(H.rows == 3);
    REQUIRE(H.cols == 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            REQUIRE(H(i, j) == (i == j ? x[i] : 0.0));

    std::vector<double> pair{-5.0, 0.5};
    Matrix H2 = init_hidden(pair);
    REQUIRE(H2(0, 0) == -5.0);
    REQUIRE(H2(0, 1) == 0.0);
    REQUIRE(H2(1, 1) == 0.5);

    REQUIRE_THROWS_AS(init_hidden(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("messages average transformed neighbors") {
    Linear fm(2, 2);
    fm.W.data = {1.0, 0.0, 0.0, 1.0};
    Matrix H(2, 2);
    H.data = {3.0, -1.0, 2.0, 4.0};
    Matrix M = message_update(fm, H);
    // with identity transform and relu, m_0 = relu(h_1), m_1 = relu(h_0)
    REQUIRE(M(0, 0) == 2.0);
    REQUIRE(M(0, 1) == 4.0);
    REQUIRE(M(1, 0) == 3.0);
    REQUIRE(M(1, 1) == 0.0);

    Matrix H1(1, 1);
    Linear fm1(1, 1);
    REQUIRE_THROWS_AS(message_update(fm1, H1), std::invalid_argument);
}

TEST_CASE("three node messages match a hand computation") {
    Rng rng(13);
    Linear fm(3, 3);
    glorot_fill(fm.W, rng);
    for (double& b : fm.b) b = rng.normal() * 0.1;
    Matrix H(3, 3);
    for (double& v : H.data) v = rng.normal();
    Matrix M = message_update(fm, H);
    for (std::size_t v = 0; v < 3; ++v) {
        for (std::size_t i = 0; i < 3; ++i) {
            double sum = 0.0;
            for (std::size_t u = 0; u < 3; ++u) {
                if (u == v) continue;
                double pre = fm.b[i];
                for (std::size_t j = 0; j < 3; ++j) pre += fm.W(i, j) * H(u, j);
                sum += std::max(pre, 0.0);
            }
            REQUIRE(M(v, i) == Catch::Approx(sum / 2.0).margin(1e-13));
        }
    }
}

TEST_CASE("zero rounds doubles the input scores") {
    Rng rng(7);
    GnnParams p = GnnParams::glorot(3, 0, rng);
    std::vector<double> x{0.5, -2.0, 1.25};
    auto s = gnn_forward(p, x);
    REQUIRE(s[0] == 1.0);
    REQUIRE(s[1] == -4.0);
    REQUIRE(s[2] == 2.5);
}

TEST_CASE("zero parameters decay the refinement geometrically") {
    std::vector<double> x{1.0, -0.5, 0.25, 2.0};
    for (std::size_t T : {1u, 2u, 3u}) {
        GnnParams p = GnnParams::zeros(4, T);
        auto s = gnn_forward(p, x);
        double f = 1.0 + std::pow(0.5, static_cast<double>(T));
        for (std::size_t v = 0; v < 4; ++v)
            REQUIRE(s[v] == Catch::Approx(f * x[v]).epsilon(1e-14));
    }
}

TEST_CASE("one round composes message and gru primitives") {
    Rng rng(29);
    GnnParams p = GnnParams::glorot(3, 1, rng);
    std::vector<double> x{0.8, -0.3, 1.7};
    auto s = gnn_forward(p, x);

    Matrix H = init_hidden(x);
    Matrix M = message_update(p.fm, H);
    for (std::size_t v = 0; v < 3; ++v) {
        auto h = gru_cell(p.gru, H.row(v), M.row(v));
        REQUIRE(s[v] == Catch::Approx(x[v] + h[v]).margin(1e-14));
    }
}

TEST_CASE("readout is residual on the diagonal") {
    Rng rng(37);
    GnnParams p = GnnParams::glorot(4, 2, rng);
    std::vector<double> x{0.1, 0.2, -0.4, 0.9};
    GnnCache c;
    auto s = gnn_forward(p, x, &c);
    const Matrix& HT = c.H.back();
    for (std::size_t v = 0; v < 4; ++v) REQUIRE(s[v] == x[v] + HT(v, v));
}

TEST_CASE("relabeling nodes relabels scores") {
    Rng rng(43);
    GnnParams p = GnnParams::glorot(4, 2, rng);
    std::vector<double> x{1.2, -0.7, 0.3, -1.9};
    std::vector<std::size_t> pi{2, 0, 3, 1};
    auto base = gnn_forward(p, x);
    auto px = permute_vec(x, pi);
    GnnParams q = conjugate(p, pi);
    auto permuted = gnn_forward(q, px);
    for (std::size_t v = 0; v < 4; ++v)
        REQUIRE(permuted[v] == Catch::Approx(base[pi[v]]).margin(1e-12));
}

TEST_CASE("gnn rejects tiny graphs and missing caches") {
    Rng rng(3);
    GnnParams p = GnnParams::glorot(3, 1, rng);
    REQUIRE_THROWS_AS(gnn_forward(p, std::vector<double>{1.0, 2.0}), std::invalid_argument);
    GnnCache c;
    REQUIRE_THROWS_AS(gnn_backward(p, c, std::vector<double>{1, 1, 1}), std::logic_error);
}

TEST_CASE("zero upstream gradient propagates as zero") {
    Rng rng(11);
    GnnParams p = GnnParams::glorot(3, 2, rng);
    std::vector<double> x{0.4, 0.9, -1.1};
    GnnCache c;
    gnn_forward(p, x, &c);
    GnnGrads g = gnn_backward(p, c, std::vector<double>{0.0, 0.0, 0.0});
    for (double v : g.fm.W.data) REQUIRE(v == 0.0);
    for (double v : g.gru.Wh.data) REQUIRE(v == 0.0);
    for (double v : g.x) REQUIRE(v == 0.0);
}

TEST_CASE("zero rounds backward doubles the upstream gradient") {
    GnnParams p = GnnParams::zeros(3, 0);
    std::vector<double> x{0.3, -0.2, 0.8};
    GnnCache c;
    gnn_forward(p, x, &c);
    std::vector<double> d{1.0, -2.0, 0.5};
    GnnGrads g = gnn_backward(p, c, d);
    REQUIRE(g.x == std::vector<double>{2.0, -4.0, 1.0});
}

TEST_CASE("gnn gradients agree with central differences") {
    Rng rng(59);
    GnnParams p = GnnParams::glorot(3, 2, rng);
    std::vector<double> x{0.6, -0.9, 1.3};
    std::vector<double> w{0.8, -0.4, 1.1};

    GnnCache c;
    gnn_forward(p, x, &c);
    GnnGrads g = gnn_backward(p, c, w);

    auto value = [&]() {
        auto s = gnn_forward(p, x);
        return w[0] * s[0] + w[1] * s[1] + w[2] * s[2];
    };
    auto check_block = [&](std::vector<double>& block, const std::vector<double>& analytic) {
        auto fd = finite_diff([&](std::span<const double>) { return value(); }, block);
        REQUIRE(grad_rel_err(fd, analytic) < 1e-5);
    };
    check_block(p.fm.W.data, g.fm.W.data);
    check_block(p.fm.b, g.fm.b);
    check_block(p.gru.Wz.data, g.gru.Wz.data);
    check_block(p.gru.Uh.data, g.gru.Uh.data);
    check_block(p.gru.bh, g.gru.bh);
    check_block(x, g.x);
}
