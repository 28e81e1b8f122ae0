#pragma once

#include "evcharge/demand.hpp"
#include "evcharge/exec.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace evcharge {

/// Service-time distribution described by its mean (hours) and shape.
class ServiceDistribution {
  public:
    enum class Kind { deterministic, exponential, erlang, lognormal };

    static ServiceDistribution deterministic(double mean);
    static ServiceDistribution exponential(double mean);
    static ServiceDistribution erlang(int k, double mean);
    /// Moment-matched: the lognormal has exactly this mean and standard deviation.
    static ServiceDistribution lognormal(double mean, double stddev);

    Kind kind() const { return kind_; }
    double mean() const { return mean_; }
    double stddev() const;
    int erlang_k() const { return k_; }
    std::string describe() const;

    double sample(std::mt19937_64& rng) const;

  private:
    ServiceDistribution(Kind kind, double mean, double stddev, int k);

    Kind kind_;
    double mean_;
    double stddev_;
    int k_;
    double log_mu_ = 0.0;
    double log_sigma_ = 0.0;
};

/// Arrival rate per hour: constant, or piecewise constant by hour of day.
using ArrivalRate = std::variant<double, HourlyRates>;

struct SimConfig {
    ArrivalRate arrival = 1.0;
    ServiceDistribution service = ServiceDistribution::exponential(1.0);
    int servers = 1;
    long n_arrivals = 1'000'000; ///< per replication, warmup included
    long warmup = -1;            ///< < 0 selects default_warmup(n_arrivals)
    std::uint64_t seed = 1;
    int replications = 20;

    long effective_warmup() const;
    void validate() const;
    /// lambda * E[S] / s, using the mean of an hourly profile.
    double offered_utilization() const;
};

/// 10% of the arrivals, at least 10^4, kept below the arrival count.
long default_warmup(long n_arrivals);

struct ReplicationStats {
    double mean_wait = 0.0;         ///< hours, post-warmup arrivals
    double p_wait = 0.0;            ///< fraction with positive wait
    double p_more_than_s = 0.0;     ///< fraction finding more than s in system
    double mean_queue_length = 0.0; ///< time average over the measured window
    double utilization = 0.0;       ///< busy-server time / (s * window)
    double arrival_rate = 0.0;      ///< observed arrivals per hour in the window
    long measured = 0;
    long waited = 0;
    long more_than_s = 0;
};

struct Estimate {
    double mean = 0.0;
    double half_width = 0.0; ///< 95% confidence half-width
};

struct SimResult {
    Estimate mean_wait;
    Estimate p_wait;
    Estimate p_more_than_s;
    Estimate mean_queue_length;
    double utilization_observed = 0.0;
    double offered_utilization = 0.0;
    bool unstable = false;
    std::vector<ReplicationStats> replications;
};

/// Student-t 95% interval over replication means.
Estimate replication_estimate(const std::vector<double>& values);

/// One replication; its random stream depends only on (seed, index).
ReplicationStats simulate_replication(const SimConfig& config, int index);

SimResult simulate(const SimConfig& config, Exec exec = Exec::parallel);

/// Pooled fraction of arrivals that waited, with a normal-approximation
/// binomial interval.
Estimate empirical_waiting_probability(const SimResult& result);

} // namespace evcharge
