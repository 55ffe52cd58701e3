#include "wpt/eh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <utility>

namespace wpt::eh {

double EhCircuit::beta(int order) const {
    double k_bar = i_s;
    for (int j = 1; j <= order; ++j) k_bar /= static_cast<double>(j);
    k_bar /= std::pow(ideality * v_t, order);
    return k_bar * std::pow(r_ant, 0.5 * order);
}

double EhCircuit::lambda_factor(int source, int order) const {
    if (order == 0) return 1.0;
    if (source < static_cast<int>(lambda.size()) &&
        order <= static_cast<int>(lambda[source].size())) {
        return lambda[source][order - 1];
    }
    return 0.0;
}

void EhCircuit::validate() const {
    if (i_s <= 0 || r_l <= 0 || ideality <= 0 || v_t <= 0 || r_ant <= 0) {
        throw std::invalid_argument("EhCircuit: electrical constants must be positive");
    }
    if (truncation_order < 2) {
        throw std::invalid_argument("EhCircuit: truncation order must be >= 2");
    }
}

EhCircuit EhCircuit::defaults(int num_sources) {
    EhCircuit c;
    c.lambda.assign(num_sources, {0.0, 1.0, 0.0, 1.5});
    return c;
}

EhCircuit EhCircuit::from_json(const nlohmann::json& j) {
    EhCircuit c;
    c.i_s = j.at("i_s_amps").get<double>();
    c.r_l = j.at("r_l_ohms").get<double>();
    c.ideality = j.at("ideality_n").get<double>();
    c.v_t = j.at("v_t_volts").get<double>();
    c.r_ant = j.at("r_ant_ohms").get<double>();
    c.truncation_order = j.at("truncation_order").get<int>();
    const auto& lam = j.at("lambda");
    if (lam.empty()) {
        throw std::invalid_argument("EhCircuit: lambda must be nonempty");
    }
    if (lam.front().is_array()) {
        c.lambda = lam.get<std::vector<std::vector<double>>>();
    } else {
        // one row, broadcast across sources on demand
        c.lambda = {lam.get<std::vector<double>>()};
    }
    c.validate();
    return c;
}

nlohmann::json EhCircuit::to_json() const {
    return nlohmann::json{{"i_s_amps", i_s},
                          {"r_l_ohms", r_l},
                          {"ideality_n", ideality},
                          {"v_t_volts", v_t},
                          {"r_ant_ohms", r_ant},
                          {"truncation_order", truncation_order},
                          {"lambda", lambda}};
}

std::vector<double> received_powers(const std::vector<double>& source_power,
                                    const std::vector<double>& gains) {
    if (source_power.size() != gains.size()) {
        throw std::invalid_argument("received_powers: size mismatch");
    }
    std::vector<double> q(source_power.size());
    for (std::size_t j = 0; j < q.size(); ++j) {
        if (source_power[j] < 0.0 || gains[j] < 0.0) {
            throw std::invalid_argument("received_powers: negative input");
        }
        q[j] = source_power[j] * gains[j];
    }
    return q;
}

const std::vector<std::vector<int>>& compositions(int total, int parts) {
    static std::map<std::pair<int, int>, std::vector<std::vector<int>>> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto key = std::make_pair(total, parts);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    std::vector<std::vector<int>> out;
    std::vector<int> current(parts, 0);
    // lexicographic enumeration by recursion on the first slot
    auto rec = [&](auto&& self, int pos, int remaining) -> void {
        if (pos == parts - 1) {
            current[pos] = remaining;
            out.push_back(current);
            return;
        }
        for (int v = remaining; v >= 0; --v) {
            current[pos] = v;
            self(self, pos + 1, remaining - v);
        }
    };
    if (parts >= 1 && total >= 0) rec(rec, 0, total);
    return cache.emplace(key, std::move(out)).first->second;
}

namespace {

double lgamma_int(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

// C_hat = M!/prod(i_m!) * prod lambda_{m,i_m}; zero if any lambda vanishes.
double c_hat(const std::vector<int>& comp, const EhCircuit& c) {
    double lam = 1.0;
    for (std::size_t m = 0; m < comp.size(); ++m) {
        if (comp[m] == 0) continue;
        lam *= c.lambda_factor(c.lambda.size() == 1 ? 0 : static_cast<int>(m),
                               comp[m]);
        if (lam == 0.0) return 0.0;
    }
    double log_multi = lgamma_int(static_cast<int>(comp.size()));
    for (int im : comp) log_multi -= lgamma_int(im);
    return std::exp(log_multi) * lam;
}

}  // namespace

double phi_excess(const std::vector<double>& q, const EhCircuit& c) {
    const int m = static_cast<int>(q.size());
    for (double v : q) {
        if (v < 0.0) throw std::invalid_argument("phi: negative received power");
    }
    double sum = 0.0;
    for (int i = 1; i <= c.truncation_order; ++i) {
        double beta_i = c.beta(i);
        double inner = 0.0;
        for (const auto& comp : compositions(i, m)) {
            double coeff = c_hat(comp, c);
            if (coeff == 0.0) continue;
            double prod = 1.0;
            for (int s = 0; s < m; ++s) {
                if (comp[s] > 0) prod *= std::pow(q[s], 0.5 * comp[s]);
            }
            inner += coeff * prod;
        }
        sum += beta_i * inner;
    }
    return sum;
}

double phi(const std::vector<double>& q, const EhCircuit& c) {
    return c.i_s + phi_excess(q, c);
}

double lambert_w0(double x) {
    const double min_arg = -std::exp(-1.0);
    if (x < min_arg) {
        if (x > min_arg * (1.0 + 1e-12)) {
            x = min_arg;  // rounding at the branch point
        } else {
            throw std::domain_error("lambert_w0: argument below -1/e");
        }
    }
    if (x == 0.0) return 0.0;

    double w;
    if (x < -0.30) {
        // series around the branch point
        double p = std::sqrt(2.0 * (std::exp(1.0) * x + 1.0));
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
    } else if (x < 3.0) {
        w = std::log1p(x);
    } else {
        double l1 = std::log(x);
        double l2 = std::log(l1);
        w = l1 - l2 + l2 / l1;
    }

    for (int it = 0; it < 60; ++it) {
        double ew = std::exp(w);
        double f = w * ew - x;
        if (std::abs(f) <= 1e-14 * std::max(std::abs(x), 1e-300)) break;
        double denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
        double step = f / denom;
        w -= step;
        if (w <= -1.0) w = -1.0 + 1e-15;
        if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(w))) break;
    }
    return w;
}

double f_nl(const std::vector<double>& q, const EhCircuit& c) {
    double excess = phi_excess(q, c);
    if (excess <= 0.0) return 0.0;
    double a = c.a();
    double arg = a * std::exp(a * c.i_s) * (c.i_s + excess);
    if (!std::isfinite(arg)) {
        throw ModelRangeError("f_nl: phi beyond representable range");
    }
    double w = lambert_w0(arg);
    double v = w / a - c.i_s;
    return v * v * c.r_l;
}

std::vector<double> f_nl_grad_inv_power(const std::vector<double>& p_inv,
                                        const std::vector<double>& gains,
                                        const EhCircuit& c) {
    const int m = static_cast<int>(p_inv.size());
    std::vector<double> q(m);
    for (int j = 0; j < m; ++j) {
        if (p_inv[j] <= 0.0) {
            throw std::invalid_argument("f_nl_grad_inv_power: p_inv must be positive");
        }
        q[j] = gains[j] / p_inv[j];
    }

    // dphi/dQ_j
    std::vector<double> dphi(m, 0.0);
    for (int i = 1; i <= c.truncation_order; ++i) {
        double beta_i = c.beta(i);
        for (const auto& comp : compositions(i, m)) {
            double coeff = c_hat(comp, c);
            if (coeff == 0.0) continue;
            for (int j = 0; j < m; ++j) {
                if (comp[j] == 0) continue;
                double prod = 0.5 * comp[j] * std::pow(q[j], 0.5 * comp[j] - 1.0);
                for (int s = 0; s < m; ++s) {
                    if (s == j || comp[s] == 0) continue;
                    prod *= std::pow(q[s], 0.5 * comp[s]);
                }
                dphi[j] += beta_i * coeff * prod;
            }
        }
    }

    double excess = phi_excess(q, c);
    std::vector<double> grad(m, 0.0);
    if (excess <= 0.0) return grad;
    double a = c.a();
    double scale = a * std::exp(a * c.i_s);
    double y = scale * (c.i_s + excess);
    double w = lambert_w0(y);
    double dw_dy = w / (y * (1.0 + w));
    double df_dw = 2.0 * (w / a - c.i_s) * c.r_l / a;
    for (int j = 0; j < m; ++j) {
        double dq_dpinv = -gains[j] / (p_inv[j] * p_inv[j]);
        grad[j] = df_dw * dw_dy * scale * dphi[j] * dq_dpinv;
    }
    return grad;
}

Tangent linearize(const std::vector<double>& p_inv_local,
                  const std::vector<double>& gains, const EhCircuit& c) {
    auto grad = f_nl_grad_inv_power(p_inv_local, gains, c);
    std::vector<double> q(p_inv_local.size());
    for (std::size_t j = 0; j < q.size(); ++j) q[j] = gains[j] / p_inv_local[j];
    double f0 = f_nl(q, c);

    Tangent t;
    t.a.resize(grad.size());
    t.b = f0;
    for (std::size_t j = 0; j < grad.size(); ++j) {
        t.a[j] = std::max(0.0, -grad[j]);
        t.b += t.a[j] * p_inv_local[j];
    }
    return t;
}

double tangent_value(const Tangent& t, const std::vector<double>& p_inv) {
    double v = t.b;
    for (std::size_t j = 0; j < t.a.size(); ++j) v -= t.a[j] * p_inv[j];
    return v;
}

double linear_eh(const std::vector<double>& q, double eta) {
    if (!(eta > 0.0 && eta <= 1.0)) {
        throw std::invalid_argument("linear_eh: eta must lie in (0,1]");
    }
    double sum = 0.0;
    for (double v : q) sum += v;
    return eta * sum;
}

double calibrate_eta(const std::vector<double>& q_ref, const EhCircuit& c) {
    double sum = 0.0;
    for (double v : q_ref) sum += v;
    if (sum <= 0.0) {
        throw std::invalid_argument("calibrate_eta: reference input must be nonzero");
    }
    return std::min(1.0, f_nl(q_ref, c) / sum);
}

}  // namespace wpt::eh
