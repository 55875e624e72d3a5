#pragma once

// Monte Carlo reductions and the replica runner shared by every estimator.

#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "kpplab/error.hpp"

namespace kpplab {

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

/// Sample mean and standard error of the mean (unbiased variance).
Estimate estimate_mean(std::span<const double> xs);

/// sqrt(a² + b²) for independent standard errors.
inline double joint_std_error(double a, double b) { return std::sqrt(a * a + b * b); }

/// |a − b| / joint standard error; 0 when both errors vanish and the means agree.
double z_score(const Estimate& a, const Estimate& b);

double sample_correlation(std::span<const double> xs, std::span<const double> ys);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov–Smirnov test, asymptotic p-value with the
/// Stephens small-sample correction.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Kolmogorov distribution tail Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}.
double kolmogorov_tail(double lambda);

/// Number of worker threads used when a config asks for 0 (= all cores).
unsigned default_jobs();

/// Runs body(r) for r = 0..replicas-1 on `jobs` threads and returns the
/// results in replica order, so reductions cannot depend on scheduling.
/// The first exception is rethrown with the replica index prepended.
template <class Result>
std::vector<Result> run_replicas(std::size_t replicas, unsigned jobs,
                                 const std::function<Result(std::size_t)>& body) {
  std::vector<Result> out(replicas);
  if (jobs == 0) jobs = default_jobs();
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(replicas, 1)));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::size_t error_replica = 0;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= replicas || failed.load()) return;
      try {
        out[r] = body(r);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error || r < error_replica) {
          error = std::current_exception();
          error_replica = r;
        }
        failed.store(true);
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  if (error) {
    try {
      std::rethrow_exception(error);
    } catch (const UsageError& e) {
      throw UsageError("replica " + std::to_string(error_replica) + ": " + e.what());
    } catch (const InvariantError& e) {
      throw InvariantError("replica " + std::to_string(error_replica) + ": " + e.what());
    } catch (const std::exception& e) {
      throw RuntimeFailure("replica " + std::to_string(error_replica) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace kpplab
