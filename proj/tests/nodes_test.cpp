#include "doctest.h"

#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "cfn/nodes.hpp"
#include "cfn/numeric_grad.hpp"

using namespace cfn;

namespace {

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo = -2.0,
                     double hi = 2.0) {
    Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.uniform(lo, hi);
    return m;
}

// The scalar objective whose gradients backward() reports: sum of
// upstream-weighted outputs.
double weighted_sum(const FunctionNode& node, const Matrix& x, const Matrix& upstream) {
    Matrix y = node.forward(x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i] * upstream.data()[i];
    return s;
}

void check_close(double analytic, double numeric, const std::string& where) {
    double tol = std::max(1e-8, 1e-5 * std::max(std::fabs(analytic), std::fabs(numeric)));
    INFO(where << ": analytic " << analytic << " vs numeric " << numeric);
    CHECK(std::fabs(analytic - numeric) <= tol);
}

std::unique_ptr<FunctionNode> make_node(NodeKind kind, std::size_t in, Rng& rng) {
    std::unique_ptr<FunctionNode> node;
    switch (kind) {
        case NodeKind::Linear: node = std::make_unique<LinearNode>(in, 1 + rng.next_u64() % 3); break;
        case NodeKind::Gaussian: node = std::make_unique<GaussianNode>(in); break;
        case NodeKind::Sigmoid: node = std::make_unique<SigmoidNode>(in); break;
        case NodeKind::Polynomial:
            node = std::make_unique<PolynomialNode>(in, 1 + rng.next_u64() % 3);
            break;
        case NodeKind::Sinusoidal: node = std::make_unique<SinusoidalNode>(in); break;
        case NodeKind::ReLU: node = std::make_unique<ReluNode>(in); break;
        case NodeKind::Exponential: node = std::make_unique<ExponentialNode>(in); break;
        case NodeKind::Step: node = std::make_unique<StepNode>(in); break;
    }
    node->init(rng);
    // Jitter away from the init defaults so the oracle also covers nonzero
    // offsets, non-unit widths and the log reparameterizations off their
    // zero point.
    if (node->param_count() > 0) {
        auto theta = node->params();
        for (double& t : theta) t += rng.uniform(-0.5, 0.5);
        node->set_params(theta);
    }
    return node;
}

const NodeKind kAllKinds[] = {NodeKind::Linear,     NodeKind::Gaussian, NodeKind::Sigmoid,
                              NodeKind::Polynomial, NodeKind::Sinusoidal, NodeKind::ReLU,
                              NodeKind::Exponential, NodeKind::Step};

} // namespace

TEST_CASE("gradient oracle: every node kind matches central differences") {
    Rng rng(20240915);
    for (NodeKind kind : kAllKinds) {
        for (int cfg = 0; cfg < 20; ++cfg) {
            std::size_t in = 1 + rng.next_u64() % 4;
            std::size_t batch = 1 + rng.next_u64() % 5;
            auto node = make_node(kind, in, rng);
            Matrix x = random_matrix(rng, batch, node->input_dim());
            Matrix upstream = random_matrix(rng, batch, node->output_dim(), -1.0, 1.0);

            NodeGrads grads = node->backward(x, upstream);
            REQUIRE(grads.input.rows() == batch);
            REQUIRE(grads.input.cols() == node->input_dim());
            REQUIRE(grads.params.size() == node->param_count());

            std::string ctx = std::string(node_kind_name(kind)) + " cfg " + std::to_string(cfg);

            if (node->param_count() > 0) {
                const auto theta0 = node->params();
                auto loss_of_params = [&](const std::vector<double>& theta) {
                    node->set_params(theta);
                    return weighted_sum(*node, x, upstream);
                };
                auto fd = fd_gradient(loss_of_params, theta0);
                node->set_params(theta0);
                for (std::size_t i = 0; i < fd.size(); ++i)
                    check_close(grads.params[i], fd[i], ctx + " param " + std::to_string(i));
            }

            std::vector<double> flat(x.data().begin(), x.data().end());
            auto loss_of_input = [&](const std::vector<double>& v) {
                Matrix xv(batch, node->input_dim(), v);
                return weighted_sum(*node, xv, upstream);
            };
            auto fd_in = fd_gradient(loss_of_input, flat);
            for (std::size_t r = 0; r < batch; ++r)
                for (std::size_t c = 0; c < node->input_dim(); ++c)
                    check_close(grads.input(r, c), fd_in[r * node->input_dim() + c],
                                ctx + " input " + std::to_string(r) + "," + std::to_string(c));
        }
    }
}

TEST_CASE("linear identity maps input through unchanged") {
    LinearNode node(3, 3);
    node.assign(Matrix::identity(3), {0.0, 0.0, 0.0});
    Matrix x = {{1.0, -2.0, 0.5}, {4.0, 0.0, -1.0}};
    Matrix y = node.forward(x);
    REQUIRE(y.same_shape(x));
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.data()[i] == x.data()[i]);
}

TEST_CASE("linear known product and bias") {
    LinearNode node(2, 2);
    node.assign(Matrix{{1.0, 2.0}, {3.0, 4.0}}, {10.0, 20.0});
    Matrix y = node.forward(Matrix{{1.0, 1.0}});
    CHECK(y(0, 0) == doctest::Approx(13.0));
    CHECK(y(0, 1) == doctest::Approx(27.0));
}

TEST_CASE("gaussian peaks at exactly one on its center") {
    GaussianNode node(3);
    node.assign({0.4, -1.2, 2.0}, 0.37);
    Matrix y = node.forward(Matrix{{0.4, -1.2, 2.0}});
    CHECK(y(0, 0) == 1.0);

    // At the maximum the gradient with respect to the center vanishes.
    NodeGrads g = node.backward(Matrix{{0.4, -1.2, 2.0}}, Matrix{{1.0}});
    for (std::size_t i = 0; i < 3; ++i) CHECK(g.params[i] == 0.0);
}

TEST_CASE("sinusoidal reproduces the harmonic-motion value at t=0") {
    SinusoidalNode node(1);
    node.assign(2.0, 1.5, std::numbers::pi / 4.0, {1.0});
    Matrix y = node.forward(Matrix{{0.0}});
    CHECK(std::fabs(y(0, 0) - 1.4142136) <= 1e-7 + 1e-9);
    CHECK(y(0, 0) == doctest::Approx(2.0 * std::sin(std::numbers::pi / 4.0)).epsilon(1e-12));
}

TEST_CASE("polynomial squares the first coordinate when directed along e1") {
    PolynomialNode node(2, 2);
    node.assign({1.0, 0.0}, {0.0, 0.0, 1.0});
    Matrix y = node.forward(Matrix{{3.0, -7.5}});
    CHECK(y(0, 0) == doctest::Approx(9.0));
}

TEST_CASE("relu passes upstream through on the positive side") {
    ReluNode node(2);
    Matrix x = {{2.0, 3.0}};
    Matrix u = {{0.7, -1.3}};
    NodeGrads g = node.backward(x, u);
    CHECK(g.input(0, 0) == 0.7);
    CHECK(g.input(0, 1) == -1.3);
    CHECK(g.params.empty());

    Matrix y = node.forward(Matrix{{-1.0, 4.0}});
    CHECK(y(0, 0) == 0.0);
    CHECK(y(0, 1) == 4.0);
}

TEST_CASE("shape law holds for every kind and batch size") {
    Rng rng(31);
    for (NodeKind kind : kAllKinds) {
        auto node = make_node(kind, 3, rng);
        for (std::size_t batch : {std::size_t{1}, std::size_t{7}, std::size_t{64}}) {
            Matrix x = random_matrix(rng, batch, node->input_dim());
            Matrix y = node->forward(x);
            CHECK(y.rows() == batch);
            CHECK(y.cols() == node->output_dim());
        }
    }
}

TEST_CASE("range laws: gaussian (0,1], sigmoid/step (0,1), exponential > 0") {
    Rng rng(32);
    for (int i = 0; i < 50; ++i) {
        Matrix x = random_matrix(rng, 8, 3, -5.0, 5.0);

        auto gauss = make_node(NodeKind::Gaussian, 3, rng);
        Matrix yg = gauss->forward(x);
        for (double v : yg.data()) {
            CHECK(v > 0.0);
            CHECK(v <= 1.0);
        }
        auto sig = make_node(NodeKind::Sigmoid, 3, rng);
        Matrix ys = sig->forward(x);
        for (double v : ys.data()) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
        auto step = make_node(NodeKind::Step, 3, rng);
        Matrix yt = step->forward(x);
        for (double v : yt.data()) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
        auto expo = make_node(NodeKind::Exponential, 3, rng);
        Matrix ye = expo->forward(x);
        for (double v : ye.data()) CHECK(v > 0.0);
    }
}

TEST_CASE("rows are processed independently") {
    Rng rng(33);
    for (NodeKind kind : kAllKinds) {
        auto node = make_node(kind, 2, rng);
        Matrix x = random_matrix(rng, 5, 2);
        Matrix y = node->forward(x);

        // Reverse the row order and expect outputs reversed the same way.
        Matrix xr(5, 2);
        for (std::size_t r = 0; r < 5; ++r)
            for (std::size_t c = 0; c < 2; ++c) xr(r, c) = x(4 - r, c);
        Matrix yr = node->forward(xr);
        for (std::size_t r = 0; r < 5; ++r)
            for (std::size_t c = 0; c < y.cols(); ++c) CHECK(yr(r, c) == y(4 - r, c));
    }
}

TEST_CASE("init defaults: zero linear bias, unit gaussian width, bounded omega") {
    Rng rng(34);
    LinearNode lin(4, 2);
    lin.init(rng);
    for (double b : lin.bias()) CHECK(b == 0.0);

    GaussianNode gauss(3);
    gauss.init(rng);
    CHECK(gauss.width() == 1.0);

    for (int i = 0; i < 10000; ++i) {
        SinusoidalNode sn(2);
        sn.init(rng);
        CHECK(sn.angular_frequency() >= 0.5);
        CHECK(sn.angular_frequency() < 2.0);
    }
}

TEST_CASE("parameter vector round trip preserves behavior") {
    Rng rng(35);
    for (NodeKind kind : kAllKinds) {
        auto node = make_node(kind, 3, rng);
        Matrix x = random_matrix(rng, 4, node->input_dim());
        Matrix before = node->forward(x);
        node->set_params(node->params());
        Matrix after = node->forward(x);
        for (std::size_t i = 0; i < before.size(); ++i)
            CHECK(before.data()[i] == after.data()[i]);
    }
}

TEST_CASE("linear(3x2) exposes 8 parameters; frozen nodes expose none") {
    LinearNode lin(3, 2);
    CHECK(lin.param_count() == 8);
    CHECK(lin.params().size() == 8);

    auto frozen = LinearNode::passthrough(3);
    CHECK_FALSE(frozen->trainable());
    CHECK(frozen->param_count() == 0);
    CHECK(frozen->params().empty());

    Matrix x = {{1.0, 2.0, 3.0}};
    Matrix y = frozen->forward(x);
    for (std::size_t i = 0; i < 3; ++i) CHECK(y(0, i) == x(0, i));

    // Frozen backward still propagates input gradients but owns no params.
    NodeGrads g = frozen->backward(x, Matrix{{1.0, 1.0, 1.0}});
    CHECK(g.params.empty());
}

TEST_CASE("set_params rejects wrong lengths") {
    LinearNode lin(2, 2);
    std::vector<double> bad(3, 0.0);
    CHECK_THROWS_AS(lin.set_params(bad), ShapeError);
}

TEST_CASE("forward rejects mismatched input width") {
    GaussianNode node(3);
    Rng rng(36);
    node.init(rng);
    CHECK_THROWS_AS(node.forward(Matrix(2, 4)), ShapeError);
    CHECK_THROWS_AS(node.backward(Matrix(2, 3), Matrix(3, 1)), ShapeError);
}

TEST_CASE("log reparameterization keeps width and sharpness positive") {
    GaussianNode gauss(2);
    gauss.assign({0.0, 0.0}, -40.0);
    CHECK(gauss.width() > 0.0);
    gauss.assign({0.0, 0.0}, 40.0);
    CHECK(std::isfinite(gauss.width()));

    StepNode step(2);
    step.assign({1.0, 0.0}, 0.0, -40.0);
    CHECK(step.sharpness() > 0.0);
}

TEST_CASE("non-finite forward output raises a numeric error naming the node") {
    LinearNode lin(1, 1);
    lin.assign(Matrix{{1e308}}, {0.0});
    try {
        lin.forward(Matrix{{1e308}});
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("linear") != std::string::npos);
    }
}

TEST_CASE("clone is an independent deep copy") {
    Rng rng(37);
    auto node = make_node(NodeKind::Gaussian, 2, rng);
    auto copy = node->clone();
    Matrix x = random_matrix(rng, 3, 2);
    Matrix y0 = node->forward(x);
    Matrix y1 = copy->forward(x);
    for (std::size_t i = 0; i < y0.size(); ++i) CHECK(y0.data()[i] == y1.data()[i]);

    auto theta = copy->params();
    for (double& t : theta) t += 1.0;
    copy->set_params(theta);
    Matrix y2 = node->forward(x);
    for (std::size_t i = 0; i < y0.size(); ++i) CHECK(y0.data()[i] == y2.data()[i]);
}
