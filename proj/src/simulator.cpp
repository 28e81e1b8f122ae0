#include "evcharge/simulator.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace evcharge {

// ---------------------------------------------------------------------------
// Service distributions

ServiceDistribution::ServiceDistribution(Kind kind, double mean, double stddev, int k)
    : kind_(kind), mean_(mean), stddev_(stddev), k_(k) {
    if (!(mean > 0.0) || !std::isfinite(mean)) {
        throw std::invalid_argument("service mean must be positive");
    }
    if (kind == Kind::lognormal) {
        if (!(stddev >= 0.0)) {
            throw std::invalid_argument("lognormal standard deviation must be non-negative");
        }
        const double cv = stddev / mean;
        const double var_log = std::log1p(cv * cv);
        log_sigma_ = std::sqrt(var_log);
        log_mu_ = std::log(mean) - 0.5 * var_log;
    }
}

ServiceDistribution ServiceDistribution::deterministic(double mean) { return {Kind::deterministic, mean, 0.0, 0}; }
ServiceDistribution ServiceDistribution::exponential(double mean) { return {Kind::exponential, mean, mean, 1}; }

ServiceDistribution ServiceDistribution::erlang(int k, double mean) {
    if (k < 1) {
        throw std::invalid_argument("Erlang shape must be at least 1");
    }
    return {Kind::erlang, mean, mean / std::sqrt(static_cast<double>(k)), k};
}

ServiceDistribution ServiceDistribution::lognormal(double mean, double stddev) {
    return {Kind::lognormal, mean, stddev, 0};
}

double ServiceDistribution::stddev() const { return stddev_; }

std::string ServiceDistribution::describe() const {
    switch (kind_) {
    case Kind::deterministic:
        return fmt::format("deterministic(mean={})", mean_);
    case Kind::exponential:
        return fmt::format("exponential(mean={})", mean_);
    case Kind::erlang:
        return fmt::format("erlang(k={}, mean={})", k_, mean_);
    case Kind::lognormal:
        return fmt::format("lognormal(mean={}, sd={})", mean_, stddev_);
    }
    return "unknown";
}

double ServiceDistribution::sample(std::mt19937_64& rng) const {
    switch (kind_) {
    case Kind::deterministic:
        return mean_;
    case Kind::exponential:
        return std::exponential_distribution<double>(1.0 / mean_)(rng);
    case Kind::erlang:
        return std::gamma_distribution<double>(static_cast<double>(k_), mean_ / k_)(rng);
    case Kind::lognormal:
        return std::lognormal_distribution<double>(log_mu_, log_sigma_)(rng);
    }
    return mean_;
}

// ---------------------------------------------------------------------------

long default_warmup(long n_arrivals) {
    long w = std::max(n_arrivals / 10, 10'000L);
    if (w >= n_arrivals) {
        w = n_arrivals / 10;
    }
    return w;
}

long SimConfig::effective_warmup() const { return warmup < 0 ? default_warmup(n_arrivals) : warmup; }

namespace {

double mean_rate(const ArrivalRate& arrival) {
    if (const auto* c = std::get_if<double>(&arrival)) {
        return *c;
    }
    const auto& h = std::get<HourlyRates>(arrival);
    return std::accumulate(h.begin(), h.end(), 0.0) / 24.0;
}

double max_rate(const ArrivalRate& arrival) {
    if (const auto* c = std::get_if<double>(&arrival)) {
        return *c;
    }
    const auto& h = std::get<HourlyRates>(arrival);
    return *std::max_element(h.begin(), h.end());
}

} // namespace

void SimConfig::validate() const {
    if (servers < 1 || replications < 1 || n_arrivals < 1) {
        throw std::invalid_argument("servers, replications and arrivals must be positive");
    }
    const long w = effective_warmup();
    if (w < 0 || w >= n_arrivals) {
        throw std::invalid_argument("warmup must satisfy 0 <= warmup < n_arrivals");
    }
    if (const auto* c = std::get_if<double>(&arrival)) {
        if (!(*c >= 0.0) || !std::isfinite(*c)) {
            throw std::invalid_argument("arrival rate must be non-negative");
        }
    } else {
        for (double r : std::get<HourlyRates>(arrival)) {
            if (!(r >= 0.0) || !std::isfinite(r)) {
                throw std::invalid_argument("hourly arrival rates must be non-negative");
            }
        }
    }
}

double SimConfig::offered_utilization() const { return mean_rate(arrival) * service.mean() / servers; }

// ---------------------------------------------------------------------------
// Event-driven replication

namespace {

struct Event {
    double time;
    std::uint64_t seq;
    bool departure;

    bool operator>(const Event& o) const { return time > o.time || (time == o.time && seq > o.seq); }
};

class ArrivalStream {
  public:
    ArrivalStream(const ArrivalRate& rate) : rate_(rate), peak_(max_rate(rate)) {}

    bool active() const { return peak_ > 0.0; }

    double next(double now, std::mt19937_64& rng) {
        std::exponential_distribution<double> gap(peak_);
        if (const auto* c = std::get_if<double>(&rate_)) {
            (void)c;
            return now + gap(rng);
        }
        // Thinning against the peak hourly rate.
        const auto& hourly = std::get<HourlyRates>(rate_);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        double t = now;
        for (;;) {
            t += gap(rng);
            const auto hour = static_cast<std::size_t>(std::fmod(t, 24.0));
            if (unit(rng) * peak_ < hourly[std::min<std::size_t>(hour, 23)]) {
                return t;
            }
        }
    }

  private:
    const ArrivalRate& rate_;
    double peak_;
};

} // namespace

ReplicationStats simulate_replication(const SimConfig& config, int index) {
    config.validate();
    ReplicationStats stats;
    ArrivalStream arrivals(config.arrival);
    if (!arrivals.active()) {
        return stats;
    }

    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(index), 0xD15Cu};
    std::mt19937_64 rng(seq);

    const int s = config.servers;
    const long n = config.n_arrivals;
    const long warmup = config.effective_warmup();

    std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
    std::deque<double> waiting; // arrival times, FCFS
    std::uint64_t next_seq = 0;
    int busy = 0;
    long arrived = 0;

    double window_start = 0.0;
    double last_arrival = 0.0;
    double clock = 0.0;
    double area_queue = 0.0;
    double area_busy = 0.0;
    bool measuring = false;
    bool arrivals_done = false;
    long measured = 0;
    double wait_sum = 0.0;
    // Customers with index >= warmup are measured; the queue is FCFS so their
    // service starts in arrival order and a counter identifies them.
    long started = 0;

    const auto advance = [&](double t) {
        if (measuring && !arrivals_done) {
            const double dt = t - clock;
            area_queue += dt * static_cast<double>(waiting.size());
            area_busy += dt * busy;
        }
        clock = t;
    };

    const auto start_service = [&](double now, double arrival_time) {
        if (started >= warmup) {
            wait_sum += now - arrival_time;
        }
        ++started;
        events.push({now + config.service.sample(rng), next_seq++, true});
    };

    events.push({arrivals.next(0.0, rng), next_seq++, false});
    while (!events.empty()) {
        const Event ev = events.top();
        events.pop();
        if (ev.time < clock) {
            throw std::logic_error("event scheduled in the past");
        }
        if (ev.departure) {
            advance(ev.time);
            if (!waiting.empty()) {
                const double a = waiting.front();
                waiting.pop_front();
                start_service(ev.time, a);
            } else {
                --busy;
            }
        } else {
            if (arrived == warmup) {
                measuring = true;
                clock = ev.time;
                window_start = ev.time;
            }
            advance(ev.time);
            const bool counted = arrived >= warmup;
            if (counted) {
                ++measured;
                if (busy == s) {
                    ++stats.waited;
                }
                if (busy + static_cast<long>(waiting.size()) > s) {
                    ++stats.more_than_s;
                }
            }
            ++arrived;
            if (busy < s) {
                ++busy;
                start_service(ev.time, ev.time);
            } else {
                waiting.push_back(ev.time);
            }
            if (arrived < n) {
                events.push({arrivals.next(ev.time, rng), next_seq++, false});
            } else {
                last_arrival = ev.time;
                arrivals_done = true;
            }
        }
        if (busy < 0 || busy > s || (!waiting.empty() && busy != s)) {
            throw std::logic_error("queue invariant violated: idle charger while vehicles wait");
        }
        if (arrivals_done && waiting.empty()) {
            break;
        }
    }

    stats.measured = measured;
    const double window = last_arrival - window_start;
    if (measured > 0) {
        stats.mean_wait = wait_sum / static_cast<double>(measured);
        stats.p_wait = static_cast<double>(stats.waited) / static_cast<double>(measured);
        stats.p_more_than_s = static_cast<double>(stats.more_than_s) / static_cast<double>(measured);
    }
    if (window > 0.0) {
        stats.mean_queue_length = area_queue / window;
        stats.utilization = area_busy / (window * s);
        stats.arrival_rate = static_cast<double>(measured - 1) / window;
    }
    return stats;
}

Estimate replication_estimate(const std::vector<double>& values) {
    Estimate e;
    if (values.empty()) {
        return e;
    }
    const double n = static_cast<double>(values.size());
    e.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() < 2) {
        return e;
    }
    double ss = 0.0;
    for (double v : values) {
        ss += (v - e.mean) * (v - e.mean);
    }
    const double sd = std::sqrt(ss / (n - 1.0));
    const boost::math::students_t dist(n - 1.0);
    e.half_width = boost::math::quantile(dist, 0.975) * sd / std::sqrt(n);
    return e;
}

SimResult simulate(const SimConfig& config, Exec exec) {
    config.validate();
    SimResult result;
    result.replications.resize(static_cast<std::size_t>(config.replications));
    const int reps = config.replications;
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
        for (int r = 0; r < reps; ++r) {
            result.replications[static_cast<std::size_t>(r)] = simulate_replication(config, r);
        }
    } else {
        for (int r = 0; r < reps; ++r) {
            result.replications[static_cast<std::size_t>(r)] = simulate_replication(config, r);
        }
    }

    std::vector<double> waits, p_wait, p_more, queue;
    double util = 0.0;
    for (const auto& rep : result.replications) {
        waits.push_back(rep.mean_wait);
        p_wait.push_back(rep.p_wait);
        p_more.push_back(rep.p_more_than_s);
        queue.push_back(rep.mean_queue_length);
        util += rep.utilization;
    }
    result.mean_wait = replication_estimate(waits);
    result.p_wait = replication_estimate(p_wait);
    result.p_more_than_s = replication_estimate(p_more);
    result.mean_queue_length = replication_estimate(queue);
    result.utilization_observed = std::clamp(util / reps, 0.0, 1.0);
    result.offered_utilization = config.offered_utilization();
    result.unstable = result.offered_utilization >= 1.0;
    return result;
}

Estimate empirical_waiting_probability(const SimResult& result) {
    long measured = 0;
    long waited = 0;
    for (const auto& rep : result.replications) {
        measured += rep.measured;
        waited += rep.waited;
    }
    Estimate e;
    if (measured == 0) {
        return e;
    }
    e.mean = static_cast<double>(waited) / static_cast<double>(measured);
    e.half_width = 1.959963984540054 * std::sqrt(e.mean * (1.0 - e.mean) / static_cast<double>(measured));
    return e;
}

} // namespace evcharge
