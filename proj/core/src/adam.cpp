#include "choreo/adam.hpp"

#include "choreo/error.hpp"

#include <cmath>

namespace choreo {

void adam_step(NamedTensors<float>& params, const NamedTensors<float>& grads, AdamState& state) {
    for (const auto& [name, p] : params) {
        const auto it = grads.find(name);
        if (it == grads.end()) throw InvalidArgument("adam_step: no gradient for parameter '" + name + "'");
        if (it->second.channels() != p.channels() || it->second.frames() != p.frames()) {
            throw DimensionError("adam_step: gradient shape mismatch for '" + name + "'");
        }
    }

    const AdamConfig& cfg = state.config;
    const std::uint64_t t = state.step + 1;
    const double correction1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double correction2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));

    for (auto& [name, p] : params) {
        const auto g = grads.at(name).data();
        auto& m = state.first_moment.try_emplace(name, p.channels(), p.frames()).first->second;
        auto& v = state.second_moment.try_emplace(name, p.channels(), p.frames()).first->second;
        auto pd = p.data();
        auto md = m.data();
        auto vd = v.data();
        for (std::size_t n = 0; n < pd.size(); ++n) {
            const double gn = g[n];
            const double mn = cfg.beta1 * md[n] + (1.0 - cfg.beta1) * gn;
            const double vn = cfg.beta2 * vd[n] + (1.0 - cfg.beta2) * gn * gn;
            md[n] = static_cast<float>(mn);
            vd[n] = static_cast<float>(vn);
            const double m_hat = mn / correction1;
            const double v_hat = vn / correction2;
            pd[n] = static_cast<float>(pd[n] - cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
        }
    }
    state.step = t;
}

}  // namespace choreo
