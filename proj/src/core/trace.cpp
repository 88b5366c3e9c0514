#include "rsopt/core/trace.hpp"

#include <charconv>
#include <stdexcept>

#include "json.hpp"

namespace rsopt {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void RunTrace::add(std::int64_t iteration, std::int64_t n_evals,
                   double current) {
  if (!records_.empty() && n_evals <= records_.back().n_evals) {
    throw std::logic_error("trace n_evals must strictly increase");
  }
  double best = current;
  if (!records_.empty() && records_.back().best < best) {
    best = records_.back().best;
  }
  records_.push_back({iteration, n_evals, current, best});
}

std::string RunTrace::to_csv() const {
  std::string out = "iteration,n_evals,current,best\n";
  for (const TraceRecord& r : records_) {
    out += std::to_string(r.iteration);
    out += ',';
    out += std::to_string(r.n_evals);
    out += ',';
    out += format_double(r.current);
    out += ',';
    out += format_double(r.best);
    out += '\n';
  }
  return out;
}

std::string RunTrace::to_json_string() const {
  nlohmann::json j;
  j["algorithm"] = algorithm_id_;
  j["seed"] = seed_;
  j["records"] = nlohmann::json::array();
  for (const TraceRecord& r : records_) {
    j["records"].push_back({r.iteration, r.n_evals, r.current, r.best});
  }
  j["notes"] = notes_;
  return j.dump();
}

}  // namespace rsopt
