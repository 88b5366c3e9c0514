#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rsopt {

struct TraceRecord {
  std::int64_t iteration;
  std::int64_t n_evals;
  double current;
  double best;
};

// Per-iteration bookkeeping for one seeded run. Single writer; best is
// derived as the running minimum of current, n_evals must strictly increase.
class RunTrace {
 public:
  RunTrace() = default;
  RunTrace(std::string algorithm_id, std::uint64_t seed)
      : algorithm_id_(std::move(algorithm_id)), seed_(seed) {}

  void add(std::int64_t iteration, std::int64_t n_evals, double current);
  void note(std::string text) { notes_.push_back(std::move(text)); }

  // Relabel after the fact; harness runs attach their own id and seed.
  void set_meta(std::string algorithm_id, std::uint64_t seed) {
    algorithm_id_ = std::move(algorithm_id);
    seed_ = seed;
  }

  const std::vector<TraceRecord>& records() const { return records_; }
  const std::vector<std::string>& notes() const { return notes_; }
  const std::string& algorithm_id() const { return algorithm_id_; }
  std::uint64_t seed() const { return seed_; }
  bool empty() const { return records_.empty(); }
  double best() const { return records_.back().best; }
  std::int64_t n_evals() const {
    return records_.empty() ? 0 : records_.back().n_evals;
  }

  // CSV with header iteration,n_evals,current,best; numbers are emitted at
  // full precision (shortest representation that parses back exactly).
  std::string to_csv() const;
  std::string to_json_string() const;

 private:
  std::string algorithm_id_;
  std::uint64_t seed_ = 0;
  std::vector<TraceRecord> records_;
  std::vector<std::string> notes_;
};

// Shortest decimal form of v that round-trips to the same double.
std::string format_double(double v);

}  // namespace rsopt
