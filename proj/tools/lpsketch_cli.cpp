// Command-line front end for the lpsketch library: sampling, duplicate
// finding, heavy hitters, norm estimation, universal-relation demos and a
// space benchmark over turnstile update streams.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lpsketch/lpsketch.hpp"

namespace {

using nlohmann::ordered_json;
using namespace lpsketch;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitBadInput = 2;
constexpr int kExitFail = 3;

struct Clock {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

ordered_json base_record(const std::string& command, std::uint64_t seed) {
  ordered_json rec;
  rec["command"] = command;
  rec["verdict"] = nullptr;
  rec["index"] = nullptr;
  rec["estimate"] = nullptr;
  rec["p"] = nullptr;
  rec["eps"] = nullptr;
  rec["delta"] = nullptr;
  rec["seed"] = seed;
  rec["counters_used"] = nullptr;
  rec["transcript_bytes"] = nullptr;
  rec["elapsed_ms"] = nullptr;
  return rec;
}

int emit(ordered_json& rec, const Clock& clock, bool pretty, int exit_code) {
  rec["elapsed_ms"] = clock.elapsed_ms();
  if (pretty) {
    std::cout << rec.dump(2) << "\n";
  } else {
    std::cout << rec.dump() << "\n";
  }
  return exit_code;
}

std::string read_all(const std::string& path) {
  if (path == "-") {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream file(path);
  if (!file) throw StreamFormatError("cannot open input file: " + path);
  std::ostringstream buf;
  buf << file.rdbuf();
  return buf.str();
}

UpdateStreamFile load_updates(const std::string& path, std::uint64_t n_flag) {
  std::istringstream in(read_all(path));
  UpdateStreamFile stream = parse_update_stream(in);
  if (n_flag != 0 && n_flag != stream.n) {
    throw StreamFormatError("--n disagrees with the stream header");
  }
  return stream;
}

SymbolStreamFile load_symbols(const std::string& path, std::uint64_t n_flag) {
  std::istringstream in(read_all(path));
  SymbolStreamFile stream = parse_symbol_stream(in);
  if (n_flag != 0 && n_flag != stream.n) {
    throw StreamFormatError("--n disagrees with the stream header");
  }
  return stream;
}

std::vector<std::uint8_t> parse_bits(const std::string& text, const std::string& flag) {
  std::vector<std::uint8_t> bits;
  bits.reserve(text.size());
  for (char ch : text) {
    if (ch != '0' && ch != '1') {
      throw StreamFormatError(flag + " must be a string over {0,1}");
    }
    bits.push_back(static_cast<std::uint8_t>(ch - '0'));
  }
  if (bits.empty()) throw StreamFormatError(flag + " must be nonempty");
  return bits;
}

DenseReference replay_reference(const UpdateStreamFile& stream) {
  DenseReference ref(stream.n);
  for (auto [i, d] : stream.updates) ref.update(i, d);
  return ref;
}

double fit_log_exponent(const std::vector<std::uint64_t>& ns, const std::vector<double>& ys) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  auto k = static_cast<double>(ns.size());
  for (std::size_t j = 0; j < ns.size(); ++j) {
    double x = std::log(static_cast<double>(log2_ceil(ns[j])));
    double y = std::log(ys[j]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

void require_range(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

int run_sample(const std::string& input, std::uint64_t n_flag, double p, double eps, double delta,
               std::uint64_t seed, bool verify, bool pretty) {
  Clock clock;
  (void)SamplerConfig::derive(p, eps, delta, 2, seed);  // range checks before I/O
  UpdateStreamFile stream = load_updates(input, n_flag);
  LpSampler sampler(p, eps, delta, stream.n, seed);
  if (sampler.config().dense_storage_advisable) {
    std::cerr << "note: repetitions >= n; a dense vector would be smaller\n";
  }
  for (auto [i, d] : stream.updates) sampler.update(i, static_cast<double>(d));
  SampleResult res = sampler.sample();

  ordered_json rec = base_record("sample", seed);
  rec["p"] = p;
  rec["eps"] = eps;
  rec["delta"] = delta;
  rec["counters_used"] = sampler.counters_used();
  rec["verdict"] = res.accepted ? "ACCEPT" : "FAIL";
  if (res.accepted) {
    rec["index"] = res.index;
    rec["estimate"] = res.estimate;
  }
  if (verify) {
    DenseReference ref = replay_reference(stream);
    ordered_json ver;
    ver["exact_norm"] = ref.lp_norm(p);
    if (res.accepted) {
      auto dist = exact_lp_distribution(ref.values(), p);
      ver["exact_mass_of_index"] = dist ? ordered_json((*dist)[res.index - 1]) : ordered_json();
      double x_i = static_cast<double>(ref[res.index]);
      ver["exact_value"] = x_i;
      ver["relative_error"] =
          x_i == 0.0 ? ordered_json() : ordered_json(std::abs(res.estimate - x_i) / std::abs(x_i));
    }
    rec["verify"] = ver;
  }
  return emit(rec, clock, pretty, res.accepted ? kExitOk : kExitFail);
}

int run_l0sample(const std::string& input, std::uint64_t n_flag, double delta, std::uint64_t seed,
                 bool verify, bool pretty) {
  Clock clock;
  require_range(delta > 0.0 && delta < 1.0, "delta must lie in (0,1)");
  UpdateStreamFile stream = load_updates(input, n_flag);
  L0Sampler sampler(seed, stream.n, delta);
  for (auto [i, d] : stream.updates) sampler.update(i, d);
  L0Sample res = sampler.sample();

  ordered_json rec = base_record("l0sample", seed);
  rec["delta"] = delta;
  rec["counters_used"] = sampler.counters_used();
  int exit_code = kExitFail;
  switch (res.verdict) {
    case L0Verdict::kIndex:
      rec["verdict"] = "ACCEPT";
      rec["index"] = res.index;
      exit_code = kExitOk;
      break;
    case L0Verdict::kZero:
      rec["verdict"] = "ZERO";
      exit_code = kExitOk;
      break;
    case L0Verdict::kFail:
      rec["verdict"] = "FAIL";
      break;
  }
  if (verify) {
    DenseReference ref = replay_reference(stream);
    ordered_json ver;
    ver["support_size"] = ref.support_size();
    if (res.verdict == L0Verdict::kIndex) {
      ver["index_in_support"] = ref[res.index] != 0;
      ver["exact_mass_of_index"] =
          ref.support_size() == 0 ? 0.0 : 1.0 / static_cast<double>(ref.support_size());
    }
    rec["verify"] = ver;
  }
  return emit(rec, clock, pretty, exit_code);
}

int run_dups(const std::string& input, std::uint64_t n_flag, const std::string& mode,
             std::uint64_t s, double delta, std::uint64_t seed, bool verify, bool pretty) {
  Clock clock;
  require_range(delta > 0.0 && delta < 1.0, "delta must lie in (0,1)");
  SymbolStreamFile stream = load_symbols(input, n_flag);
  DupResult res;
  if (mode == "full") {
    res = find_duplicate_full(stream.symbols, stream.n, delta, seed);
  } else if (mode == "short") {
    res = find_duplicate_short(stream.symbols, stream.n, s, delta, seed);
  } else {
    res = find_duplicate_long(stream.symbols, stream.n, s, delta, seed);
  }

  ordered_json rec = base_record("dups", seed);
  rec["delta"] = delta;
  rec["mode"] = mode;
  int exit_code = kExitFail;
  switch (res.kind) {
    case DupResult::Kind::kDuplicate:
      rec["verdict"] = "DUPLICATE";
      rec["index"] = res.index;
      exit_code = kExitOk;
      break;
    case DupResult::Kind::kNoDuplicate:
      rec["verdict"] = "NO-DUPLICATE";
      exit_code = kExitOk;
      break;
    case DupResult::Kind::kFail:
      rec["verdict"] = "FAIL";
      break;
  }
  if (verify) {
    std::unordered_map<std::uint64_t, std::uint64_t> counts;
    for (auto a : stream.symbols) ++counts[a];
    ordered_json ver;
    if (res.kind == DupResult::Kind::kDuplicate) {
      ver["occurrences_of_index"] = counts[res.index];
      ver["is_true_duplicate"] = counts[res.index] >= 2;
    }
    std::uint64_t dup_count = 0;
    for (auto [sym, c] : counts) {
      (void)sym;
      dup_count += c >= 2;
    }
    ver["distinct_duplicates"] = dup_count;
    rec["verify"] = ver;
  }
  return emit(rec, clock, pretty, exit_code);
}

int run_heavy(const std::string& input, std::uint64_t n_flag, double p, double phi,
              std::uint64_t seed, bool verify, bool pretty) {
  Clock clock;
  require_range(p > 0.0 && p <= 2.0, "p must lie in (0,2]");
  require_range(phi > 0.0 && phi < 1.0, "phi must lie in (0,1)");
  UpdateStreamFile stream = load_updates(input, n_flag);
  auto m = static_cast<std::uint64_t>(std::ceil(std::pow(phi, -p)));
  CountSketch<std::int64_t> sketch(mix64(seed, 1), stream.n, m);
  NormSketch norm(mix64(seed, 2), stream.n, p);
  for (auto [i, d] : stream.updates) {
    sketch.update(i, d);
    norm.update(i, static_cast<double>(d));
  }
  double r = norm.estimate();
  auto hits = sketch.heavy_hitters(phi, p, r);

  ordered_json rec = base_record("heavy", seed);
  rec["p"] = p;
  rec["phi"] = phi;
  rec["estimate"] = r;
  rec["counters_used"] = sketch.counters_used() + norm.counters_used();
  rec["verdict"] = r == 0.0 ? "ZERO" : "ACCEPT";
  rec["indices"] = hits;
  if (verify) {
    DenseReference ref = replay_reference(stream);
    double norm_exact = ref.lp_norm(p);
    ordered_json ver;
    ver["exact_norm"] = norm_exact;
    std::vector<std::uint64_t> required, forbidden_hit;
    for (std::uint64_t i = 1; i <= stream.n; ++i) {
      double mag = std::abs(static_cast<double>(ref[i]));
      if (mag >= phi * norm_exact && mag > 0.0) required.push_back(i);
    }
    for (auto i : hits) {
      double mag = std::abs(static_cast<double>(ref[i]));
      if (mag <= phi / 2.0 * norm_exact) forbidden_hit.push_back(i);
    }
    ver["required_indices"] = required;
    ver["forbidden_indices_reported"] = forbidden_hit;
    bool valid = forbidden_hit.empty();
    for (auto i : required) {
      valid = valid && std::find(hits.begin(), hits.end(), i) != hits.end();
    }
    ver["valid_heavy_hitter_set"] = valid;
    rec["verify"] = ver;
  }
  return emit(rec, clock, pretty, kExitOk);
}

int run_estnorm(const std::string& input, std::uint64_t n_flag, double p, std::uint64_t seed,
                bool verify, bool pretty) {
  Clock clock;
  require_range(p > 0.0 && p <= 2.0, "p must lie in (0,2]");
  UpdateStreamFile stream = load_updates(input, n_flag);
  NormSketch norm(seed, stream.n, p);
  for (auto [i, d] : stream.updates) norm.update(i, static_cast<double>(d));
  double r = norm.estimate();

  ordered_json rec = base_record("estnorm", seed);
  rec["p"] = p;
  rec["estimate"] = r;
  rec["counters_used"] = norm.counters_used();
  rec["verdict"] = r == 0.0 ? "ZERO" : "ACCEPT";
  if (verify) {
    DenseReference ref = replay_reference(stream);
    double exact = ref.lp_norm(p);
    ordered_json ver;
    ver["exact_norm"] = exact;
    ver["within_sandwich"] = exact == 0.0 ? r == 0.0 : (r >= exact && r <= 2.0 * exact);
    rec["verify"] = ver;
  }
  return emit(rec, clock, pretty, kExitOk);
}

int run_ur(const std::string& x_text, const std::string& y_text, unsigned rounds, double delta,
           std::uint64_t seed, bool symmetrize, bool pretty) {
  Clock clock;
  auto x = parse_bits(x_text, "--x");
  auto y = parse_bits(y_text, "--y");
  if (x.size() != y.size()) throw StreamFormatError("--x and --y must have equal length");

  URResult res;
  if (rounds == 1) {
    auto inner = [&](const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
      return ur_one_round(a, b, delta, seed);
    };
    res = symmetrize ? ur_symmetrized(inner, x, y, mix64(seed, 0x636c69)) : inner(x, y);
  } else {
    auto inner = [&](const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
      return ur_two_round(a, b, delta, seed);
    };
    res = symmetrize ? ur_symmetrized(inner, x, y, mix64(seed, 0x636c69)) : inner(x, y);
  }

  ordered_json rec = base_record("ur", seed);
  rec["delta"] = delta;
  rec["rounds"] = rounds;
  rec["transcript_bytes"] = res.transcript_bytes;
  rec["round1_bytes"] = res.round1_bytes;
  rec["round2_bytes"] = res.round2_bytes;
  if (res.found) {
    rec["verdict"] = "ACCEPT";
    rec["index"] = res.index;
    rec["differs"] = x[res.index - 1] != y[res.index - 1];
  } else {
    rec["verdict"] = "FAIL";
  }
  return emit(rec, clock, pretty, res.found ? kExitOk : kExitFail);
}

int run_bench(const std::string& n_list, double p, double eps, double delta, std::uint64_t seed,
              bool pretty) {
  Clock clock;
  std::vector<std::uint64_t> ns;
  std::stringstream tokens(n_list);
  std::string token;
  while (std::getline(tokens, token, ',')) {
    std::uint64_t n = std::stoull(token);
    if (n < 2) throw StreamFormatError("bench needs n >= 2");
    ns.push_back(n);
  }
  if (ns.size() < 2) throw StreamFormatError("bench needs at least two n values");

  ordered_json points = ordered_json::array();
  std::vector<double> sampler_counters, sampler_bits, ur_counters;
  for (std::uint64_t n : ns) {
    LpSampler sampler(p, eps, delta, n, seed);
    L0Sampler l0(seed, n, delta);
    std::size_t counters = sampler.counters_used();
    // standard discretization: counters hold poly(n)-bounded integers
    std::size_t bits_per_counter = 2 * log2_ceil(n) + 1;
    std::size_t bits = counters * bits_per_counter;
    std::size_t l0_counters = l0.counters_used();
    std::size_t transcript = l0.serialize().size();

    ordered_json point;
    point["n"] = n;
    point["log2_n"] = log2_ceil(n);
    point["sampler_counters"] = counters;
    point["sampler_bits"] = bits;
    point["ur_state_counters"] = l0_counters;
    point["ur_transcript_bytes"] = transcript;
    points.push_back(point);

    sampler_counters.push_back(static_cast<double>(counters));
    sampler_bits.push_back(static_cast<double>(bits));
    ur_counters.push_back(static_cast<double>(l0_counters));
  }

  ordered_json rec = base_record("bench", seed);
  rec["p"] = p;
  rec["eps"] = eps;
  rec["delta"] = delta;
  rec["verdict"] = "ACCEPT";
  rec["points"] = points;
  ordered_json fit;
  fit["sampler_counters_exponent"] = fit_log_exponent(ns, sampler_counters);
  fit["sampler_bits_exponent"] = fit_log_exponent(ns, sampler_bits);
  fit["ur_counters_exponent"] = fit_log_exponent(ns, ur_counters);
  rec["fit"] = fit;
  return emit(rec, clock, pretty, kExitOk);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"linear-sketch toolkit for turnstile streams"};
  app.require_subcommand(1);

  std::string input = "-";
  std::uint64_t n_flag = 0;
  double p = 1.0, eps = 0.25, delta = 0.1, phi = 0.1;
  std::uint64_t seed = 1, s = 0;
  bool verify = false, pretty = false, symmetrize = false;
  std::string mode = "full", x_text, y_text, n_list;
  unsigned rounds = 1;

  auto add_common = [&](CLI::App* cmd, bool with_input) {
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_flag("--json", pretty, "pretty-print the JSON record");
    if (with_input) {
      cmd->add_option("--input", input, "stream file, or - for stdin");
      cmd->add_option("--n", n_flag, "expected dimension (checked against the header)");
      cmd->add_flag("--verify", verify, "replay through the exact oracle and annotate");
    }
  };

  CLI::App* sample = app.add_subcommand("sample", "Lp-sample an update stream");
  sample->add_option("--p", p, "norm order in (0,2)")->required();
  sample->add_option("--eps", eps, "relative error");
  sample->add_option("--delta", delta, "failure probability");
  add_common(sample, true);

  CLI::App* l0sample = app.add_subcommand("l0sample", "uniform support sample");
  l0sample->add_option("--delta", delta, "failure probability");
  add_common(l0sample, true);

  CLI::App* dups = app.add_subcommand("dups", "find a duplicate symbol");
  dups->add_option("--mode", mode, "full | short | long")
      ->check(CLI::IsMember({"full", "short", "long"}));
  dups->add_option("--s", s, "length offset for short/long modes");
  dups->add_option("--delta", delta, "failure probability");
  add_common(dups, true);

  CLI::App* heavy = app.add_subcommand("heavy", "heavy hitter indices");
  heavy->add_option("--p", p, "norm order in (0,2]")->required();
  heavy->add_option("--phi", phi, "heaviness threshold in (0,1)")->required();
  add_common(heavy, true);

  CLI::App* estnorm = app.add_subcommand("estnorm", "constant-factor Lp norm estimate");
  estnorm->add_option("--p", p, "norm order in (0,2]")->required();
  add_common(estnorm, true);

  CLI::App* ur = app.add_subcommand("ur", "universal relation protocol demo");
  ur->add_option("--x", x_text, "Alice's bit string")->required();
  ur->add_option("--y", y_text, "Bob's bit string")->required();
  ur->add_option("--rounds", rounds, "1 or 2")->check(CLI::IsMember({1, 2}));
  ur->add_option("--delta", delta, "failure probability");
  ur->add_flag("--symmetrize", symmetrize, "wrap with the uniformizing reduction");
  add_common(ur, false);

  CLI::App* bench = app.add_subcommand("bench", "space accounting across dimensions");
  bench->add_option("--p", p, "norm order in (0,2)");
  bench->add_option("--eps", eps, "relative error");
  bench->add_option("--delta", delta, "failure probability");
  bench->add_option("--n", n_list, "comma-separated dimensions")->required();
  add_common(bench, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sample->parsed()) return run_sample(input, n_flag, p, eps, delta, seed, verify, pretty);
    if (l0sample->parsed()) return run_l0sample(input, n_flag, delta, seed, verify, pretty);
    if (dups->parsed()) return run_dups(input, n_flag, mode, s, delta, seed, verify, pretty);
    if (heavy->parsed()) return run_heavy(input, n_flag, p, phi, seed, verify, pretty);
    if (estnorm->parsed()) return run_estnorm(input, n_flag, p, seed, verify, pretty);
    if (ur->parsed()) return run_ur(x_text, y_text, rounds, delta, seed, symmetrize, pretty);
    if (bench->parsed()) return run_bench(n_list, p, eps, delta, seed, pretty);
  } catch (const StreamFormatError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::domain_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
