#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "hazelab/autodiff.hpp"

namespace hazelab::testing {

inline Tensor4 random_tensor(Shape s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor4 t(s);
    for (auto& v : t.data()) v = u(rng);
    return t;
}

// |v| in [0.1, 1] with random sign: keeps relu/abs/clamp kinks out of reach of the FD step.
inline Tensor4 away_from_zero(Shape s, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.1, 1.0);
    std::bernoulli_distribution sign(0.5);
    Tensor4 t(s);
    for (auto& v : t.data()) v = sign(rng) ? u(rng) : -u(rng);
    return t;
}

// A shuffled ladder of values `gap` apart, so no min ever ties.
inline Tensor4 distinct_values(Shape s, std::mt19937_64& rng, double lo = -1.0) {
    Tensor4 t(s);
    std::vector<std::size_t> order(t.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const double gap = 1.0 / static_cast<double>(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = lo + static_cast<double>(order[i]) * gap;
    return t;
}

using LossFn = std::function<Var(Tape&, const std::vector<Var>&)>;

// Contracts a non-scalar output with fixed random weights so every element matters.
inline Var contract(const Var& out, std::uint64_t seed = 7) {
    std::mt19937_64 rng(seed);
    return ad::sum(ad::mul(out, out.tape().constant(random_tensor(out.shape(), rng))));
}

// Worst per-input relative error ||analytic - numeric|| / max(||analytic||, ||numeric||)
// between reverse-mode gradients and central differences.
inline double gradient_error(const LossFn& f, const std::vector<Tensor4>& inputs, double step = 1e-5) {
    std::vector<Tensor4> analytic;
    {
        Tape tape;
        std::vector<Var> vars;
        for (const auto& x : inputs) vars.push_back(tape.leaf(x, true));
        tape.backward(f(tape, vars));
        for (const auto& v : vars) analytic.push_back(v.grad());
    }
    auto eval = [&](const std::vector<Tensor4>& xs) {
        Tape tape;
        std::vector<Var> vars;
        for (const auto& x : xs) vars.push_back(tape.constant(x));
        return f(tape, vars).value().item();
    };
    double worst = 0.0;
    std::vector<Tensor4> probe = inputs;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        double diff = 0.0, na = 0.0, nn = 0.0;
        for (std::size_t i = 0; i < inputs[k].size(); ++i) {
            const double x0 = inputs[k][i];
            probe[k][i] = x0 + step;
            const double up = eval(probe);
            probe[k][i] = x0 - step;
            const double down = eval(probe);
            probe[k][i] = x0;
            const double numeric = (up - down) / (2.0 * step);
            const double a = analytic[k][i];
            diff += (a - numeric) * (a - numeric);
            na += a * a;
            nn += numeric * numeric;
        }
        const double scale = std::sqrt(std::max(na, nn));
        if (scale < 1e-12) continue;  // both vanish
        worst = std::max(worst, std::sqrt(diff) / scale);
    }
    return worst;
}

}  // namespace hazelab::testing
