#pragma once

#include <cstdint>
#include <functional>
#include <json.hpp>
#include <string>

namespace irstd::bench {

struct BenchOptions {
  int runs = 10;    // >= 5
  int warmups = 2;  // discarded
  std::uint64_t seed = 1;
  /// rpca suite instance size.
  int rpca_rows = 2500, rpca_cols = 484;
  /// ript-stop suite scene size.
  int ript_size = 128;

  void validate() const;
};

/// Median wall time in milliseconds over `runs` timed calls after `warmups`
/// discarded ones, on a monotonic clock.
double median_ms(const std::function<void()>& fn, int runs, int warmups);

struct BenchReport {
  std::string suite;
  bool guard_passed = false;  // accelerated output matches its baseline
  bool claim_passed = false;  // direction of the speed claim holds
  nlohmann::json details;

  nlohmann::json to_json() const;
};

/// Shifted vs naive contrast measure on a 256 x 256 scene, scales
/// {1,3,5,7,9}. Guard: max |diff| <= 1e-9. Claim: speedup >= 1.1.
BenchReport mpcm_suite(const BenchOptions& opt);

/// IALM vs APG on the rank-2 + 1% sparse patch-image at tol 1e-7. Guard:
/// both recover B and T within 1e-4 relative error. Claim: IALM uses no
/// more iterations than APG.
BenchReport rpca_suite(const BenchOptions& opt);

/// Support-stability vs residual-only stopping for the tensor detector on a
/// fixed synthetic scene. Guard: identical masks. Claim: early stop uses no
/// more iterations.
BenchReport ript_stop_suite(const BenchOptions& opt);

/// Throws std::invalid_argument for an unknown suite name.
BenchReport run_suite(const std::string& name, const BenchOptions& opt);

/// Host description recorded alongside timings.
nlohmann::json cpu_fingerprint();

}  // namespace irstd::bench
