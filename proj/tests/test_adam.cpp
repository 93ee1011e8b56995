#include <doctest.h>

#include <cmath>
#include <limits>

#include "anomalnet/adam.hpp"
#include "anomalnet/model.hpp"
#include "gradcheck.hpp"

using namespace anomalnet;
using namespace testsupport;

namespace {

// independent scalar transcription of the update recurrence
struct ScalarAdam {
    double m = 0.0, v = 0.0;
    int t = 0;
    double step(double theta, double g, double lr, double b1, double b2, double eps) {
        t += 1;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mh = m / (1 - std::pow(b1, t));
        const double vh = v / (1 - std::pow(b2, t));
        return theta - lr * mh / (std::sqrt(vh) + eps);
    }
};

} // namespace

TEST_CASE("adam_init zero-fills moments and starts at t=0") {
    auto st = adam_init<float>({{2, 3}, {5}});
    CHECK(st.t == 0);
    CHECK(st.lr == 0.01);
    CHECK(st.beta1 == 0.9);
    CHECK(st.beta2 == 0.999);
    CHECK(st.eps == 1e-8);
    REQUIRE(st.m.size() == 2);
    REQUIRE(st.v.size() == 2);
    CHECK(st.m[0].shape() == std::vector<int64_t>{2, 3});
    CHECK(st.v[1].shape() == std::vector<int64_t>{5});
    for (const auto& t : st.m)
        for (int64_t i = 0; i < t.numel(); ++i) CHECK(t[i] == 0.0f);

    auto empty = adam_init<float>({});
    CHECK(empty.m.empty());
    CHECK(empty.t == 0);
}

TEST_CASE("adam_init mirrors the model parameter set: 6 weight + 6 bias tensors") {
    Model model{ModelConfig{}};
    auto st = adam_init<float>(model.param_shapes());
    CHECK(st.m.size() == 12);
    auto params = model.params().tensor_list();
    for (size_t i = 0; i < params.size(); ++i) CHECK(st.m[i].shape() == params[i]->shape());
}

TEST_CASE("adam_step: zero gradient leaves parameters unchanged") {
    Tensor<double> theta({3}, {1.0, -2.0, 0.5});
    Tensor<double> grad({3});
    auto st = adam_init<double>({{3}});
    adam_step<double>({&theta}, {&grad}, st);
    CHECK(st.t == 1);
    CHECK(theta[0] == 1.0);
    CHECK(theta[1] == -2.0);
    CHECK(theta[2] == 0.5);
}

TEST_CASE("adam_step: closed-form first step") {
    // bias correction makes m_hat = g and sqrt(v_hat) = |g| on step one, so
    // theta' = 1 - 0.01 * 0.5/(0.5 + 1e-8)
    Tensor<double> theta({1}, {1.0});
    Tensor<double> grad({1}, {0.5});
    auto st = adam_init<double>({{1}});
    adam_step<double>({&theta}, {&grad}, st);
    CHECK(theta[0] == doctest::Approx(0.99).epsilon(1e-7));
    CHECK(theta[0] == doctest::Approx(1.0 - 0.01 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("adam_step: successive steps match the scalar reference recurrence") {
    Tensor<double> theta({2}, {1.0, -0.25});
    Tensor<double> grad({2}, {0.3, -0.7});
    auto st = adam_init<double>({{2}});

    ScalarAdam ref0, ref1;
    double e0 = 1.0, e1 = -0.25;
    for (int step = 0; step < 5; ++step) {
        adam_step<double>({&theta}, {&grad}, st);
        e0 = ref0.step(e0, 0.3, st.lr, st.beta1, st.beta2, st.eps);
        e1 = ref1.step(e1, -0.7, st.lr, st.beta1, st.beta2, st.eps);
        CHECK(theta[0] == doctest::Approx(e0).epsilon(1e-12));
        CHECK(theta[1] == doctest::Approx(e1).epsilon(1e-12));
    }
    CHECK(st.t == 5);

    // float storage agrees with the double recurrence to well under 1e-7
    Tensor<float> theta_f({1}, {1.0f});
    Tensor<float> grad_f({1}, {0.3f});
    auto st_f = adam_init<float>({{1}});
    ScalarAdam ref_f;
    double ef = 1.0;
    for (int step = 0; step < 2; ++step) {
        adam_step<float>({&theta_f}, {&grad_f}, st_f);
        ef = ref_f.step(ef, (double)grad_f[0], st_f.lr, st_f.beta1, st_f.beta2, st_f.eps);
    }
    CHECK(std::abs((double)theta_f[0] - ef) / std::abs(ef) < 1e-7);
}

TEST_CASE("adam_step: first-step magnitude is bounded by the learning rate") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        Tensor<double> theta = random_tensor({4, 4}, seed);
        Tensor<double> before = theta;
        Tensor<double> grad = random_tensor({4, 4}, seed + 1000);
        for (int64_t i = 0; i < grad.numel(); ++i)
            if (grad[i] == 0.0) grad[i] = 0.1;
        auto st = adam_init<double>({{4, 4}});
        adam_step<double>({&theta}, {&grad}, st);
        for (int64_t i = 0; i < theta.numel(); ++i) {
            const double delta = std::abs(theta[i] - before[i]);
            CHECK(delta <= st.lr * (1.0 + 1e-6));
            // with eps << |g| the first step is ~ lr * sign(g)
            CHECK(delta >= st.lr * 0.999);
        }
        CHECK(st.v[0].numel() == 16);
        for (int64_t i = 0; i < st.v[0].numel(); ++i) CHECK(st.v[0][i] >= 0.0);
    }
}

TEST_CASE("adam_step is deterministic") {
    auto run = [] {
        Tensor<float> theta = random_tensor_f({8}, 7);
        Tensor<float> grad = random_tensor_f({8}, 8);
        auto st = adam_init<float>({{8}});
        for (int i = 0; i < 3; ++i) adam_step<float>({&theta}, {&grad}, st);
        return theta;
    };
    Tensor<float> a = run();
    Tensor<float> b = run();
    for (int64_t i = 0; i < a.numel(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("adam_step fails fast on a non-finite gradient, before touching state") {
    Tensor<float> theta({2}, {1.0f, 2.0f});
    Tensor<float> grad({2}, {0.5f, std::numeric_limits<float>::quiet_NaN()});
    auto st = adam_init<float>({{2}});
    CHECK_THROWS_AS(adam_step<float>({&theta}, {&grad}, st), Error);
    CHECK(st.t == 0);
    CHECK(st.m[0][0] == 0.0f);
    CHECK(theta[0] == 1.0f);

    Tensor<float> wrong({3});
    CHECK_THROWS_AS(adam_step<float>({&theta}, {&wrong}, st), Error);
}
