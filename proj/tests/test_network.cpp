#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

#include "ehcrn/network.hpp"

using namespace ehcrn;

namespace {

// Independent forward pass in Eigen, used as an oracle.
Eigen::VectorXd eigen_forward(const QNetwork& net, const std::vector<double>& x) {
    Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    const auto& layers = net.layers();
    for (std::size_t li = 0; li < layers.size(); ++li) {
        const auto& l = layers[li];
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w(
            l.weights.data(), static_cast<Eigen::Index>(l.outputs), static_cast<Eigen::Index>(l.inputs));
        Eigen::Map<const Eigen::VectorXd> b(l.biases.data(), static_cast<Eigen::Index>(l.outputs));
        a = w * a + b;
        if (li + 1 < layers.size()) a = a.cwiseMax(0.0);
    }
    return a;
}

std::vector<double> random_vec(RandomStream& s, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = s.uniform(lo, hi);
    return v;
}

std::vector<Transition> random_batch(RandomStream& s, std::size_t n, std::size_t in, std::size_t out) {
    std::vector<Transition> batch(n);
    for (auto& t : batch) {
        t.state = random_vec(s, in);
        t.next_state = random_vec(s, in);
        t.action = s.index(out);
        t.reward = s.uniform(-1.0, 1.0);
        t.terminal = s.bernoulli(0.2);
    }
    return batch;
}

} // namespace

TEST(Forward, ZeroNetworkGivesZero) {
    QNetwork net({11, 64, 64, 11});
    RandomStream s(1);
    const auto q = net.forward(random_vec(s, 11));
    ASSERT_EQ(q.size(), 11u);
    for (double v : q) EXPECT_EQ(v, 0.0);
}

TEST(Forward, SingleLayerIsAffine) {
    QNetwork net({2, 1});
    net.parameter(0) = 2.0;
    net.parameter(1) = -1.0;
    net.parameter(2) = 0.5;
    const std::vector<double> x{3.0, 4.0};
    EXPECT_DOUBLE_EQ(net.forward(x)[0], 2.5);
}

TEST(Forward, MatchesEigenOracle) {
    RandomStream s(21);
    const auto net = QNetwork::random({11, 64, 64, 11}, s);
    for (int i = 0; i < 20; ++i) {
        const auto x = random_vec(s, 11, -3.0, 3.0);
        const auto q = net.forward(x);
        const auto ref = eigen_forward(net, x);
        for (std::size_t k = 0; k < q.size(); ++k) EXPECT_NEAR(q[k], ref[static_cast<Eigen::Index>(k)], 1e-12);
    }
}

TEST(Forward, ShapeMismatchThrows) {
    QNetwork net({11, 4, 3});
    std::vector<double> x(10);
    EXPECT_THROW(net.forward(x), ShapeError);
    EXPECT_THROW(QNetwork({11}), ShapeError);
}

TEST(Argmax, LowestIndexOnTies) {
    const std::vector<double> q{1.0, 3.0, 3.0, 2.0};
    EXPECT_EQ(argmax(q), 1u);
    const std::vector<double> flat(5, 0.0);
    EXPECT_EQ(argmax(flat), 0u);
}

TEST(TdLoss, ZeroWhenPredictionMatchesTarget) {
    QNetwork net({1, 2});
    net.parameter(2) = 0.5;  // bias of output 0
    std::vector<Transition> batch{{{1.0}, 0, 0.5, {1.0}, true}};
    const auto r = td_loss(net, net, batch, 0.9);
    EXPECT_EQ(r.loss, 0.0);
    EXPECT_EQ(r.grads.squared_norm(), 0.0);
}

TEST(TdLoss, BootstrapUsesTargetMaximum) {
    QNetwork net({1, 2});
    QNetwork target({1, 2});
    target.parameter(3) = 2.0;  // target Q(s', 1) = 2
    std::vector<Transition> batch{{{1.0}, 0, 1.0, {1.0}, false}};
    // y = 1 + 0.5 * 2 = 2, prediction 0, squared error 4
    EXPECT_DOUBLE_EQ(td_loss(net, target, batch, 0.5).loss, 4.0);
    batch[0].terminal = true;
    EXPECT_DOUBLE_EQ(td_loss(net, target, batch, 0.5).loss, 1.0);
}

TEST(TdLoss, InvalidArguments) {
    QNetwork net({2, 2});
    std::vector<Transition> empty;
    EXPECT_THROW(td_loss(net, net, empty, 0.9), InvalidParameter);
    std::vector<Transition> one{{{1.0, 0.0}, 0, 0.0, {1.0, 0.0}, false}};
    EXPECT_THROW(td_loss(net, net, one, 1.5), InvalidParameter);
    QNetwork other({2, 3});
    EXPECT_THROW(td_loss(net, other, one, 0.9), ShapeError);
}

TEST(TdLoss, GradientMatchesFiniteDifferences) {
    RandomStream s(99);
    const double h = 1e-6;
    int pairs = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t in = 3 + s.index(6);
        const std::size_t hidden = 4 + s.index(8);
        const std::size_t out = 2 + s.index(4);
        auto net = QNetwork::random({in, hidden, hidden, out}, s);
        const auto target = QNetwork::random({in, hidden, hidden, out}, s);
        const auto batch = random_batch(s, 8, in, out);
        const auto analytic = td_loss(net, target, batch, 0.9);
        std::vector<double> flat_grad;
        for (const auto& g : analytic.grads.layers) {
            flat_grad.insert(flat_grad.end(), g.weights.begin(), g.weights.end());
            flat_grad.insert(flat_grad.end(), g.biases.begin(), g.biases.end());
        }
        ASSERT_EQ(flat_grad.size(), net.parameter_count());
        for (std::size_t p = 0; p < net.parameter_count(); ++p) {
            const double w = net.parameter(p);
            net.parameter(p) = w + h;
            const double up = td_loss(net, target, batch, 0.9).loss;
            net.parameter(p) = w - h;
            const double down = td_loss(net, target, batch, 0.9).loss;
            net.parameter(p) = w;
            const double fd = (up - down) / (2 * h);
            const double a = flat_grad[p];
            EXPECT_LE(std::abs(a - fd), std::max(1e-7, 1e-4 * std::max(std::abs(a), std::abs(fd))))
                << "trial " << trial << " parameter " << p;
        }
        ++pairs;
    }
    EXPECT_EQ(pairs, 20);
}

TEST(Sgd, SingleParameterStep) {
    QNetwork net({1, 1});
    net.parameter(0) = 1.0;
    auto g = net.zero_gradients();
    g.layers[0].weights[0] = 2.0;
    sgd_step(net, g, 0.003);
    EXPECT_DOUBLE_EQ(net.parameter(0), 0.994);
}

TEST(Sgd, ZeroGradientIsNoOp) {
    RandomStream s(4);
    auto net = QNetwork::random({3, 5, 2}, s);
    const auto before = net;
    sgd_step(net, net.zero_gradients(), 0.01);
    EXPECT_EQ(net, before);
}

TEST(Sgd, RejectsBadStepSizeAndNonFinite) {
    QNetwork net({1, 1});
    auto g = net.zero_gradients();
    EXPECT_THROW(sgd_step(net, g, 0.0), InvalidParameter);
    EXPECT_THROW(sgd_step(net, g, 1.0), InvalidParameter);
    g.layers[0].weights[0] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(sgd_step(net, g, 0.1), std::runtime_error);
}

TEST(Sgd, DescendsOnFixedBatch) {
    RandomStream s(8);
    auto net = QNetwork::random({4, 16, 3}, s);
    const auto target = net;
    const auto batch = random_batch(s, 16, 4, 3);
    const double start = td_loss(net, target, batch, 0.5).loss;
    for (int i = 0; i < 200; ++i) sgd_step(net, td_loss(net, target, batch, 0.5).grads, 0.01);
    EXPECT_LT(td_loss(net, target, batch, 0.5).loss, start);
}

TEST(Clone, CopiesParametersExactly) {
    RandomStream s(2);
    const auto net = QNetwork::random({11, 8, 11}, s);
    auto copy = clone_parameters(net);
    EXPECT_EQ(parameter_distance(net, copy), 0.0);
    copy.parameter(0) += 1.0;
    EXPECT_DOUBLE_EQ(parameter_distance(net, copy), 1.0);
}

TEST(Checkpoint, RoundTripIsBitExact) {
    RandomStream s(6);
    const auto net = QNetwork::random({11, 64, 64, 11}, s);
    std::stringstream ss;
    save_checkpoint(net, ss);
    const auto loaded = load_checkpoint(ss);
    EXPECT_EQ(loaded, net);
    const auto x = random_vec(s, 11);
    const auto a = net.forward(x);
    const auto b = loaded.forward(x);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(Checkpoint, RejectsGarbage) {
    std::stringstream ss("not a checkpoint at all");
    EXPECT_THROW(load_checkpoint(ss), std::runtime_error);
}
