#include "evcharge/queueing.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>

namespace evcharge {

UnstableQueueError::UnstableQueueError(double rho)
    : std::domain_error(fmt::format("queue is unstable: utilization {:.6g} >= 1", rho)), rho_(rho) {}

namespace {

void check(const QueueParams& q) {
    if (!(q.lambda >= 0.0) || !std::isfinite(q.lambda) || !(q.mu > 0.0) || !std::isfinite(q.mu) ||
        !(q.sigma >= 0.0) || !std::isfinite(q.sigma) || q.servers < 1) {
        throw std::invalid_argument("queue parameters require lambda >= 0, mu > 0, sigma >= 0, s >= 1");
    }
    const double rho = q.utilization();
    if (rho >= 1.0) {
        throw UnstableQueueError(rho);
    }
}

double checked_probability(double x) {
    if (x < -1e-9 || x > 1.0 + 1e-9 || std::isnan(x)) {
        throw std::logic_error(fmt::format("probability {} outside [0, 1]", x));
    }
    return std::clamp(x, 0.0, 1.0);
}

/// Erlang terms a^z / z! in log form, built by the recursion
/// term_{z+1} = term_z * a / (z + 1), plus the M/M/s normaliser.
struct ErlangTerms {
    std::vector<double> log_terms; ///< z = 0..s
    double log_tail = 0.0;         ///< log(term_s / (1 - rho))
    double log_norm = 0.0;         ///< log of the bracket inverted by P0

    explicit ErlangTerms(const QueueParams& q) {
        const int s = q.servers;
        const double log_a = std::log(q.offered_load());
        log_terms.resize(static_cast<std::size_t>(s) + 1);
        log_terms[0] = 0.0;
        for (int z = 0; z < s; ++z) {
            log_terms[z + 1] = log_terms[z] + log_a - std::log(static_cast<double>(z + 1));
        }
        log_tail = log_terms[s] - std::log1p(-q.utilization());
        double peak = log_tail;
        for (int z = 0; z < s; ++z) {
            peak = std::max(peak, log_terms[z]);
        }
        double sum = std::exp(log_tail - peak);
        for (int z = 0; z < s; ++z) {
            sum += std::exp(log_terms[z] - peak);
        }
        log_norm = peak + std::log(sum);
    }

    double p0() const { return std::exp(-log_norm); }
    double delay() const { return std::exp(log_tail - log_norm); }
    double head(int n) const { return std::exp(log_terms[static_cast<std::size_t>(n)] - log_norm); }
};

} // namespace

double p0(const QueueParams& q) {
    check(q);
    if (q.lambda == 0.0) {
        return 1.0;
    }
    return checked_probability(ErlangTerms(q).p0());
}

double delay_probability(const QueueParams& q) {
    check(q);
    if (q.lambda == 0.0) {
        return 0.0;
    }
    return checked_probability(ErlangTerms(q).delay());
}

double w_mms(const QueueParams& q) {
    check(q);
    if (q.lambda == 0.0) {
        return 0.0;
    }
    // lambda^s / ((s-1)! (s mu - lambda)^2 mu^(s-1)) * P0 == C / (s mu - lambda)
    return ErlangTerms(q).delay() / (q.servers * q.mu - q.lambda);
}

double w_mds(const QueueParams& q, MdsVariant variant) {
    const double wm = w_mms(q);
    if (q.lambda == 0.0) {
        return 0.0;
    }
    const int s = q.servers;
    if (s == 1) {
        // H = 0: the correction vanishes and the M/D/1 result is exact.
        return 0.5 * wm;
    }
    const double h = (s - 1.0) / (16.0 * s) * (std::sqrt((10.0 * s + 8.0) / 2.0) - 2.0);
    const double spare = s * q.mu - q.lambda;
    const double gain = h * spare / q.lambda;
    if (variant == MdsVariant::cosmetatos) {
        return 0.5 * (1.0 + gain) * wm;
    }
    const double x = q.lambda * (s - 1.0) / (h * spare * (s + 1.0));
    return 0.5 * (1.0 - gain * std::expm1(-x)) * wm;
}

double w_mgs(const QueueParams& q, MdsVariant variant) {
    const double wm = w_mms(q);
    if (wm == 0.0) {
        return 0.0;
    }
    const double wd = w_mds(q, variant);
    const double xi2 = q.cv() * q.cv();
    return (1.0 + xi2) * wm * wd / (2.0 * xi2 * wd + (1.0 - xi2) * wm);
}

double geometric_ratio(const QueueParams& q, MdsVariant variant) {
    const double wm = w_mms(q);
    if (wm == 0.0) {
        return 0.0;
    }
    const double rho = q.utilization();
    const double r = w_mgs(q, variant) / wm;
    return rho * r / (1.0 - rho + rho * r);
}

std::vector<double> state_probabilities(const QueueParams& q, int n_max, MdsVariant variant) {
    check(q);
    if (n_max < 0) {
        throw std::invalid_argument("n_max must be non-negative");
    }
    std::vector<double> p(static_cast<std::size_t>(n_max) + 1, 0.0);
    if (q.lambda == 0.0) {
        p[0] = 1.0;
        return p;
    }
    const ErlangTerms terms(q);
    const double c = terms.delay();
    const double zeta = geometric_ratio(q, variant);
    const int s = q.servers;
    for (int n = 0; n <= n_max; ++n) {
        p[static_cast<std::size_t>(n)] = n < s ? terms.head(n) : c * (1.0 - zeta) * std::pow(zeta, n - s);
    }
    return p;
}

double tail_mass(const QueueParams& q, int n_from, MdsVariant variant) {
    if (n_from < q.servers) {
        throw std::invalid_argument("tail_mass is defined from N = s upward");
    }
    const double c = delay_probability(q);
    return c * std::pow(geometric_ratio(q, variant), n_from - q.servers);
}

double tail_mean_queue(const QueueParams& q, MdsVariant variant) {
    const double zeta = geometric_ratio(q, variant);
    return delay_probability(q) * zeta / (1.0 - zeta);
}

double waiting_probability(const QueueParams& q, MdsVariant variant) {
    // 1 - sum_{N<s} P(N) - C (1 - zeta) reduces to C zeta because the head
    // sums to 1 - C; the reduced form avoids cancellation for small values.
    return checked_probability(delay_probability(q) * geometric_ratio(q, variant));
}

QueueMetrics evaluate(const QueueParams& q, MdsVariant variant) {
    check(q);
    QueueMetrics m;
    m.rho = q.utilization();
    m.xi = q.cv();
    m.w_mms = w_mms(q);
    m.w_mds = w_mds(q, variant);
    m.w_mgs = w_mgs(q, variant);
    m.p0 = p0(q);
    m.c_delay = delay_probability(q);
    m.zeta = geometric_ratio(q, variant);
    m.p_wait = waiting_probability(q, variant);
    return m;
}

} // namespace evcharge
