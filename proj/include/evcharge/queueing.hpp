#pragma once

#include <stdexcept>
#include <vector>

namespace evcharge {

/// M/G/s queue with FCFS discipline and unlimited waiting room.
struct QueueParams {
    double lambda = 0.0; ///< arrivals per hour
    double mu = 1.0;     ///< service rate, 1 / mean charge time (per hour)
    double sigma = 0.0;  ///< standard deviation of the charge time (hours)
    int servers = 1;

    double utilization() const { return lambda / (servers * mu); }
    double offered_load() const { return lambda / mu; }
    /// Coefficient of variation of the service time, sigma * mu.
    double cv() const { return sigma * mu; }
};

/// Raised when rho = lambda / (s mu) >= 1; steady-state quantities do not exist.
class UnstableQueueError : public std::domain_error {
  public:
    explicit UnstableQueueError(double rho);
    double rho() const { return rho_; }

  private:
    double rho_;
};

/// Correction used to turn the M/M/s wait into the M/D/s wait.
enum class MdsVariant {
    /// Cosmetatos-type correction damped by 1 - exp(-...); stays below W(M/M/s).
    damped,
    /// Undamped Cosmetatos correction 1/2 [1 + H (s mu - lambda) / lambda] W(M/M/s).
    cosmetatos,
};

struct QueueMetrics {
    double rho = 0.0;
    double xi = 0.0;
    double w_mms = 0.0;
    double w_mds = 0.0;
    double w_mgs = 0.0;
    double p0 = 1.0;
    double c_delay = 0.0; ///< P(N >= s): an arrival finds every charger busy
    double zeta = 0.0;
    double p_wait = 0.0;  ///< P(N > s) under the geometric tail
};

double p0(const QueueParams& q);
double w_mms(const QueueParams& q);
double w_mds(const QueueParams& q, MdsVariant variant = MdsVariant::damped);
double w_mgs(const QueueParams& q, MdsVariant variant = MdsVariant::damped);
double delay_probability(const QueueParams& q);

/// Ratio of the geometric tail P(N+1) / P(N) for N >= s.
double geometric_ratio(const QueueParams& q, MdsVariant variant = MdsVariant::damped);

/// P(N) for N = 0..n_max: Poisson-like head below s, geometric tail from s.
std::vector<double> state_probabilities(const QueueParams& q, int n_max, MdsVariant variant = MdsVariant::damped);

/// Mass of the geometric tail N >= n_from (n_from >= s), in closed form.
double tail_mass(const QueueParams& q, int n_from, MdsVariant variant = MdsVariant::damped);

/// Mean queue length sum_{N >= s} (N - s) P(N) of the geometric tail.
double tail_mean_queue(const QueueParams& q, MdsVariant variant = MdsVariant::damped);

/// P(N > s).
double waiting_probability(const QueueParams& q, MdsVariant variant = MdsVariant::damped);

QueueMetrics evaluate(const QueueParams& q, MdsVariant variant = MdsVariant::damped);

} // namespace evcharge
