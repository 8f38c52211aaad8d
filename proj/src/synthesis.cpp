#include "ncp/synthesis.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <optional>

#include "ncp/parallel.hpp"

namespace ncp {

namespace {

using Clock = std::chrono::steady_clock;

// Stream keys. Cells derive theirs from the root key and the child path.
constexpr std::uint64_t kEstimationKey = 0x65737469ULL;
constexpr std::uint64_t kRefineKey = 0x72656669ULL;
constexpr std::uint64_t kExpandKey = 0x65787061ULL;

std::uint64_t child_key(std::uint64_t parent, int child) {
  return mix64(parent ^ mix64(static_cast<std::uint64_t>(child) + 1));
}

struct Cell {
  Ball ball;
  std::uint64_t key = 0;
  int depth = 0;
  std::optional<ControlSignal> warm;
};

// A verified triple whose signal is not yet in an alphabet.
struct Pending {
  Ball ball;
  ControlSignal signal;
  double tau = 0.0;
  double alpha = 0.0;
  double slack = 0.0;
  CellOrigin origin = CellOrigin::kDirect;
};

struct Attempt {
  VerificationOutcome outcome;
  ControlSignal signal;
};

// Rate no larger than any rate the certificate can report: bootstrapped
// cells certify alpha' only.
std::optional<Envelope> envelope_of(const SynthesisConfig& config) {
  if (!config.excursion_check) return std::nullopt;
  const double rate = config.bootstrap
                          ? config.bootstrap_rate_fraction * config.alpha
                          : config.alpha;
  return Envelope{rate, config.eps};
}

const Envelope* ptr(const std::optional<Envelope>& e) {
  return e ? &*e : nullptr;
}

Attempt attempt_direct(const SystemModel& model, const Ball& ball,
                       const Region& feasible, const Norm& norm,
                       const SynthesisConfig& config, double lipschitz,
                       std::uint64_t key, const ControlSignal* warm) {
  SearchParams params = config.search;
  params.seed = stream_key(config.seed, key);
  const std::optional<Envelope> envelope = envelope_of(config);
  SearchObjective objective{config.alpha, ball.radius, lipschitz, &feasible};
  if (envelope) {
    objective.envelope = true;
    objective.envelope_eps = envelope->eps;
  }
  SearchResult found =
      search_signal(model, ball.center, model.equilibrium_state,
                    config.tau_max, config.dt, norm, params, objective, warm);
  Attempt attempt;
  attempt.outcome = best_tau(model, ball.center, ball.radius, found.signal,
                             config.alpha, lipschitz, norm, feasible,
                             ptr(envelope));
  attempt.signal = std::move(found.signal);
  if (attempt.outcome.passed) return attempt;
  // Saturated holds as a fallback when the search lands on a poor signal.
  for (const Input* level : {&model.input_lower, &model.input_upper}) {
    ControlSignal hold = constant_hold(model, *level, config.tau_max, config.dt);
    VerificationOutcome outcome =
        best_tau(model, ball.center, ball.radius, hold, config.alpha,
                 lipschitz, norm, feasible, ptr(envelope));
    if (outcome.passed) {
      attempt.outcome = outcome;
      attempt.signal = std::move(hold);
      return attempt;
    }
  }
  return attempt;
}

Pending direct_triple(const Ball& ball, const Attempt& attempt) {
  const int steps = steps_for(attempt.outcome.tau, attempt.signal.dt);
  return {ball, attempt.signal.prefix(steps), attempt.outcome.tau,
          attempt.outcome.alpha, attempt.outcome.slack, CellOrigin::kDirect};
}

bool inside_eps(const Ball& ball, const Norm& norm, const State& x_star,
                double eps) {
  return norm.distance(ball.center, x_star) + ball.radius <= eps;
}

std::vector<Anchor> anchors_of(const std::vector<Pending>& triples) {
  std::vector<Anchor> anchors;
  for (const Pending& p : triples)
    if (p.origin == CellOrigin::kDirect)
      anchors.push_back({p.ball.center, p.ball.radius, p.tau});
  return anchors;
}

std::vector<Anchor> anchors_of(const AssignmentSet& set) {
  std::vector<Anchor> anchors;
  for (const Triple& t : set.triples)
    anchors.push_back({t.center, t.radius, t.tau});
  return anchors;
}

// Tries durations stride, 2 stride, ... of `signal` until one bootstraps.
std::optional<Pending> try_bootstrap(const SystemModel& model, const Ball& ball,
                                     const ControlSignal& signal,
                                     std::span<const Anchor> anchors,
                                     const Region& feasible, const Norm& norm,
                                     const SynthesisConfig& config,
                                     double lipschitz) {
  if (anchors.empty()) return std::nullopt;
  const double alpha_prime = config.bootstrap_rate_fraction * config.alpha;
  const int stride = std::max(config.bootstrap_stride, 1);
  for (int steps = stride; steps <= signal.steps(); steps += stride) {
    BootstrapOutcome out;
    try {
      out = check_bootstrap(model, ball.center, ball.radius, signal, steps,
                            anchors, config.alpha, alpha_prime, lipschitz, norm,
                            &feasible);
    } catch (const DegenerateCandidate&) {
      return std::nullopt;
    } catch (const IntegrationDiverged&) {
      return std::nullopt;
    }
    const std::optional<Envelope> envelope = envelope_of(config);
    if (out.passed && envelope &&
        !check_excursion(model, ball.center, ball.radius, signal,
                         steps * signal.dt, lipschitz, *envelope, norm).passed)
      continue;
    if (out.passed)
      return Pending{ball, signal.prefix(steps), steps * signal.dt, alpha_prime,
                     1.0 - out.ratio, CellOrigin::kBootstrap};
  }
  return std::nullopt;
}

// Re-checks a triple from scratch: both inequalities at its own rate for a
// direct cell, the bootstrap conditions otherwise.
bool recheck(const SystemModel& model, const Pending& p,
             std::span<const Anchor> anchors, const Region& feasible,
             const Norm& norm, const SynthesisConfig& config,
             double lipschitz) {
  const int steps = p.signal.steps();
  const std::optional<Envelope> envelope = envelope_of(config);
  if (p.origin == CellOrigin::kDirect) {
    const VerificationOutcome out =
        certify_at(model, p.ball.center, p.ball.radius, p.signal, steps,
                   p.alpha, lipschitz, norm, feasible, ptr(envelope));
    return out.passed;
  }
  if (envelope &&
      !check_excursion(model, p.ball.center, p.ball.radius, p.signal,
                       steps * p.signal.dt, lipschitz, *envelope, norm).passed)
    return false;
  const BootstrapOutcome out = check_bootstrap(
      model, p.ball.center, p.ball.radius, p.signal, steps, anchors,
      config.alpha, p.alpha, lipschitz, norm, &feasible);
  return out.passed;
}

std::vector<Ball> initial_grid(const Region& target, const State& x_star,
                               const Norm& norm, const SynthesisConfig& config,
                               double lipschitz) {
  const double r_max = region_extent(target, x_star);
  double rho = config.initial_fraction;
  if (config.grid_mode == GridMode::kCoveringRatio)
    rho = compute_rho(config.k_gain, config.lambda, config.alpha,
                      config.tau_max, lipschitz);
  std::vector<Ball> cells;
  for (Ball& ball : build_annulus_grid(r_max, config.eps, rho, norm, x_star))
    if (intersects(ball, target)) cells.push_back(std::move(ball));
  return cells;
}

double lipschitz_for(const SystemModel& model, const Region& region,
                     const SynthesisConfig& config, TubeEstimate* estimate) {
  TubeEstimate tube =
      estimate_constants(model, region, config.tau_max, config.dt,
                         config.estimation, stream_key(config.seed, kEstimationKey));
  if (config.lipschitz > 0.0) tube.lipschitz = config.lipschitz;
  if (estimate) *estimate = tube;
  return tube.lipschitz;
}

void summarize_rates(const std::vector<Pending>& triples, double& min_alpha,
                     double& mean_alpha) {
  min_alpha = 0.0;
  mean_alpha = 0.0;
  if (triples.empty()) return;
  min_alpha = std::numeric_limits<double>::infinity();
  for (const Pending& p : triples) {
    min_alpha = std::min(min_alpha, p.alpha);
    mean_alpha += p.alpha;
  }
  mean_alpha /= static_cast<double>(triples.size());
}

std::vector<Pending> pending_of(const AssignmentSet& set) {
  std::vector<Pending> out;
  for (const Triple& t : set.triples)
    out.push_back({{t.center, t.radius}, set.alphabet[t.signal], t.tau,
                   t.alpha, t.slack, t.origin});
  return out;
}

// Appends triples and their signals in order.
void append(AssignmentSet& set, const std::vector<Pending>& triples) {
  for (const Pending& p : triples) {
    Triple t;
    t.center = p.ball.center;
    t.radius = p.ball.radius;
    t.signal = set.alphabet.add(p.signal);
    t.tau = p.tau;
    t.alpha = p.alpha;
    t.slack = p.slack;
    t.origin = p.origin;
    set.triples.push_back(std::move(t));
  }
}

Certificate base_certificate(const SynthesisConfig& config,
                             const TubeEstimate& tube, double lipschitz) {
  Certificate cert;
  cert.lipschitz = lipschitz;
  cert.core_lipschitz = lipschitz;
  cert.speed_bound = tube.speed_bound;
  cert.inflation = tube.inflation;
  cert.eps = config.eps;
  cert.seed = config.seed;
  cert.dt = config.dt;
  cert.boundary_samples = config.estimation.boundary_samples;
  cert.pair_samples = config.estimation.pair_samples;
  cert.speed_samples = config.estimation.speed_samples;
  cert.covering_samples = config.covering_samples;
  return cert;
}

// Rate and horizons from the realized triples: tau_core is the longest
// direct duration (and tau_0), bootstrapped durations add on top of it.
void fill_rates(Certificate& cert, const std::vector<Pending>& triples,
                double tau0, double fallback_alpha) {
  double core = tau0;
  double extra = 0.0;
  double alpha = std::numeric_limits<double>::infinity();
  for (const Pending& p : triples) {
    alpha = std::min(alpha, p.alpha);
    if (p.origin == CellOrigin::kDirect)
      core = std::max(core, p.tau);
    else
      extra = std::max(extra, p.tau);
  }
  cert.alpha = triples.empty() ? fallback_alpha : alpha;
  cert.core_tau = core;
  cert.tau = core + extra;
  update_constants(cert);
}

void finish_report(SynthesisReport& report, const AssignmentSet& set,
                   const Certificate& cert, const std::vector<Pending>& kept,
                   Clock::time_point start) {
  report.verified_cells = 0;
  report.bootstrapped_cells = 0;
  for (const Pending& p : kept)
    (p.origin == CellOrigin::kDirect ? report.verified_cells
                                     : report.bootstrapped_cells)++;
  report.failed_cells = static_cast<int>(report.failed.size());
  summarize_rates(kept, report.min_alpha, report.mean_alpha);
  report.total_signals = set.alphabet.size();
  report.covering = check_covering(set, cert, cert.covering_samples);
  report.complete = report.covering.passed() && report.failed.empty();
  report.certificate = cert;
  report.wall_time =
      std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

void SynthesisConfig::validate() const {
  const auto require = [](bool ok, const char* field, const char* what) {
    if (!ok) throw InvalidConfig(std::string(field) + ": " + what);
  };
  require(alpha > 0.0, "alpha", "must be > 0");
  require(dt > 0.0, "dt", "must be > 0");
  require(tau_max >= dt, "tau_max", "must be >= dt");
  require(eps > 0.0, "eps", "must be > 0");
  require(max_splits >= 0, "max_splits", "must be >= 0");
  require(tau0 >= dt, "tau0", "must be >= dt");
  require(initial_fraction > 0.0 && initial_fraction < 1.0, "initial_fraction",
          "must lie in (0, 1)");
  if (grid_mode == GridMode::kCoveringRatio) {
    require(lambda > alpha, "lambda", "must exceed alpha in covering_ratio grid mode");
    require(k_gain >= 1.0, "k_gain", "must be >= 1 in covering_ratio grid mode");
  }
  require(lipschitz >= 0.0, "lipschitz", "must be >= 0");
  require(search.rollouts >= 1, "search.rollouts", "must be >= 1");
  require(search.iterations >= 1, "search.iterations", "must be >= 1");
  require(search.temperature > 0.0, "search.temperature", "must be > 0");
  require(search.noise_hold >= 1, "search.noise_hold", "must be >= 1");
  require(estimation.inflation >= 1.0, "estimation.inflation", "must be >= 1");
  require(covering_samples >= 0, "covering_samples", "must be >= 0");
  require(bootstrap_rate_fraction > 0.0 && bootstrap_rate_fraction < 1.0,
          "bootstrap_rate_fraction", "must lie in (0, 1)");
  require(bootstrap_stride >= 1, "bootstrap_stride", "must be >= 1");
  require(max_cells >= 0, "max_cells", "must be >= 0");
  require(threads >= 1, "threads", "must be >= 1");
}

double region_extent(const Region& region, const State& center) {
  const Norm& norm = region.norm();
  const Vector lo = region.bounding_lower();
  const Vector hi = region.bounding_upper();
  Vector far(region.dim());
  for (int k = 0; k < region.dim(); ++k) {
    double reach = std::max(std::abs(hi[k] - center[k]), std::abs(lo[k] - center[k]));
    if (norm.is_angular(k)) reach = std::min(reach, std::numbers::pi);
    far[k] = reach;
  }
  return norm(far);
}

SynthesisResult synthesize(const SystemModel& model, const Region& region,
                           const SynthesisConfig& config) {
  const auto start = Clock::now();
  config.validate();
  const Norm& norm = region.norm();
  validate(model, norm);
  const State& x_star = model.equilibrium_state;
  const double inscribed = -signed_distance(x_star, region);
  if (!(inscribed > 0.0))
    throw InvalidConfig("region: equilibrium must lie in the interior");
  if (!(config.eps < inscribed))
    throw InvalidConfig("eps: must be smaller than the inscribed radius of the region");

  TubeEstimate tube;
  const double lipschitz = lipschitz_for(model, region, config, &tube);

  SynthesisResult result;
  SynthesisReport& report = result.report;
  std::vector<Cell> frontier;
  {
    const std::vector<Ball> grid = initial_grid(region, x_star, norm, config, lipschitz);
    for (std::size_t i = 0; i < grid.size(); ++i)
      frontier.push_back({grid[i], static_cast<std::uint64_t>(i), 0, std::nullopt});
  }
  report.initial_cells = static_cast<int>(frontier.size());

  std::vector<Pending> verified;
  // Failed leaves with their best signal, for the bootstrap pass.
  std::vector<std::pair<Ball, ControlSignal>> leaves;
  while (!frontier.empty()) {
    if (config.max_cells > 0 &&
        report.searched_cells + static_cast<long long>(frontier.size()) >
            config.max_cells) {
      const auto room =
          static_cast<std::size_t>(std::max(0LL, config.max_cells - report.searched_cells));
      for (std::size_t i = room; i < frontier.size(); ++i)
        report.failed.push_back(frontier[i].ball);
      frontier.resize(room);
      report.budget_exhausted = true;
    }
    std::vector<Attempt> attempts(frontier.size());
    parallel_for(frontier.size(), config.threads, [&](std::size_t i) {
      const Cell& cell = frontier[i];
      attempts[i] = attempt_direct(model, cell.ball, region, norm, config,
                                   lipschitz, cell.key,
                                   cell.warm ? &*cell.warm : nullptr);
    });
    report.searched_cells += static_cast<long long>(frontier.size());

    std::vector<Cell> next;
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      const Cell& cell = frontier[i];
      const Attempt& attempt = attempts[i];
      if (attempt.outcome.passed) {
        verified.push_back(direct_triple(cell.ball, attempt));
        continue;
      }
      if (cell.depth >= config.max_splits) {
        leaves.emplace_back(cell.ball, attempt.signal);
        continue;
      }
      const std::vector<Ball> children = split_ball(cell.ball, norm, 0.0);
      for (std::size_t c = 0; c < children.size(); ++c) {
        if (!intersects(children[c], region) ||
            inside_eps(children[c], norm, x_star, config.eps))
          continue;
        next.push_back({children[c], child_key(cell.key, static_cast<int>(c)),
                        cell.depth + 1, attempt.signal});
      }
    }
    frontier = std::move(next);
  }

  if (config.bootstrap && !leaves.empty()) {
    const std::vector<Anchor> anchors = anchors_of(verified);
    std::vector<std::optional<Pending>> boot(leaves.size());
    parallel_for(leaves.size(), config.threads, [&](std::size_t i) {
      boot[i] = try_bootstrap(model, leaves[i].first, leaves[i].second, anchors,
                              region, norm, config, lipschitz);
    });
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (boot[i])
        verified.push_back(std::move(*boot[i]));
      else
        report.failed.push_back(leaves[i].first);
    }
  } else {
    for (const auto& leaf : leaves) report.failed.push_back(leaf.first);
  }

  // Trim: every retained triple must pass its checks from scratch.
  const std::vector<Anchor> anchors = anchors_of(verified);
  std::vector<char> keep(verified.size(), 0);
  parallel_for(verified.size(), config.threads, [&](std::size_t i) {
    keep[i] = recheck(model, verified[i], anchors, region, norm, config, lipschitz);
  });
  std::vector<Pending> kept;
  for (std::size_t i = 0; i < verified.size(); ++i) {
    if (keep[i])
      kept.push_back(std::move(verified[i]));
    else
      report.failed.push_back(verified[i].ball);
  }
  report.trimmed_cells = static_cast<int>(verified.size() - kept.size());

  AssignmentSet& set = result.assignments;
  set.model_id = model.id;
  set.norm = norm;
  set.region = region;
  set.equilibrium = x_star;
  set.alphabet = Alphabet::with_default(model, config.tau0, config.dt);
  append(set, kept);

  Certificate& cert = result.certificate;
  cert = base_certificate(config, tube, lipschitz);
  fill_rates(cert, kept, config.tau0, config.alpha);
  cert.covering_samples = config.covering_samples;
  finish_report(report, set, cert, kept, start);
  cert.covered = report.complete;
  cert.uncovered_samples = static_cast<int>(report.covering.uncovered.size());
  report.certificate = cert;
  report.previous_min_alpha = report.min_alpha;
  report.previous_mean_alpha = report.mean_alpha;
  return result;
}

SynthesisResult refine(const SystemModel& model, const AssignmentSet& set,
                       const Certificate& certificate,
                       const SynthesisConfig& config) {
  const auto start = Clock::now();
  config.validate();
  const Norm& norm = set.norm;
  const State& x_star = set.equilibrium;
  const double lipschitz = certificate.lipschitz;
  const std::vector<Pending> parents = pending_of(set);

  struct Child {
    Ball ball;
    int parent = 0;
    std::uint64_t key = 0;
  };
  std::vector<Child> children;
  for (std::size_t p = 0; p < parents.size(); ++p) {
    const std::vector<Ball> split = split_ball(parents[p].ball, norm, 0.0);
    for (std::size_t c = 0; c < split.size(); ++c) {
      bool relevant = intersects(split[c], set.region);
      for (const Region& extension : set.extensions)
        relevant = relevant || intersects(split[c], extension);
      if (!relevant || inside_eps(split[c], norm, x_star, certificate.eps))
        continue;
      children.push_back({split[c], static_cast<int>(p),
                          child_key(stream_key(kRefineKey, p), static_cast<int>(c))});
    }
  }

  // Direct candidates: the parent signal at its best time, the parent
  // signal at the parent's time, and a fresh warm-started search.
  const std::optional<Envelope> envelope = envelope_of(config);
  std::vector<std::optional<Pending>> direct(children.size());
  parallel_for(children.size(), config.threads, [&](std::size_t i) {
    const Child& child = children[i];
    const Pending& parent = parents[child.parent];
    std::optional<Pending> best;
    const auto consider = [&](const VerificationOutcome& out,
                              const ControlSignal& signal) {
      if (!out.passed || (best && out.alpha <= best->alpha)) return;
      best = direct_triple(child.ball, {out, signal});
    };
    try {
      consider(best_tau(model, child.ball.center, child.ball.radius,
                        parent.signal, config.alpha, lipschitz, norm, set.region,
                        ptr(envelope)),
               parent.signal);
      consider(certify_at(model, child.ball.center, child.ball.radius,
                          parent.signal, parent.signal.steps(), config.alpha,
                          lipschitz, norm, set.region, ptr(envelope)),
               parent.signal);
    } catch (const IntegrationDiverged&) {
    }
    const Attempt fresh = attempt_direct(model, child.ball, set.region, norm,
                                         config, lipschitz, child.key,
                                         &parent.signal);
    consider(fresh.outcome, fresh.signal);
    direct[i] = std::move(best);
  });

  std::vector<Pending> anchors_src;
  for (const auto& d : direct)
    if (d) anchors_src.push_back(*d);
  const std::vector<Anchor> anchors = anchors_of(anchors_src);

  std::vector<std::optional<Pending>> boot(children.size());
  if (config.bootstrap) {
    parallel_for(children.size(), config.threads, [&](std::size_t i) {
      if (direct[i]) return;
      boot[i] = try_bootstrap(model, children[i].ball,
                              parents[children[i].parent].signal, anchors,
                              set.region, norm, config, lipschitz);
    });
  }

  // A child that fails, or certifies a lower rate than its parent, is
  // replaced by the parent cell itself.
  SynthesisResult result;
  SynthesisReport& report = result.report;
  summarize_rates(parents, report.previous_min_alpha, report.previous_mean_alpha);
  report.initial_cells = static_cast<int>(parents.size());
  report.searched_cells = static_cast<long long>(children.size());
  std::vector<Pending> kept;
  std::vector<char> parent_kept(parents.size(), 0);
  for (std::size_t i = 0; i < children.size(); ++i) {
    const int p = children[i].parent;
    std::optional<Pending>& chosen = direct[i] ? direct[i] : boot[i];
    if (chosen && chosen->alpha >= parents[p].alpha) {
      kept.push_back(std::move(*chosen));
    } else if (!parent_kept[p]) {
      parent_kept[p] = 1;
      kept.push_back(parents[p]);
    }
  }

  AssignmentSet& out = result.assignments;
  out = set;
  out.triples.clear();
  out.alphabet = Alphabet{{set.alphabet[0]}};
  append(out, kept);

  Certificate& cert = result.certificate;
  cert = certificate;
  cert.core_lipschitz = certificate.core_lipschitz;
  fill_rates(cert, kept, set.alphabet[0].duration(), certificate.alpha);
  cert.covering_samples = config.covering_samples;
  finish_report(report, out, cert, kept, start);
  cert.covered = report.complete;
  cert.uncovered_samples = static_cast<int>(report.covering.uncovered.size());
  report.certificate = cert;
  return result;
}

SynthesisResult expand(const SystemModel& model, const AssignmentSet& set,
                       const Certificate& certificate, const Region& new_region,
                       const SynthesisConfig& config) {
  const auto start = Clock::now();
  config.validate();
  const Norm& norm = set.norm;
  const State& x_star = set.equilibrium;
  if (new_region.dim() != set.region.dim())
    throw InvalidInput("new region dimension does not match the assignment set");
  std::vector<const Region*> known{&set.region};
  for (const Region& extension : set.extensions) known.push_back(&extension);
  for (const Region* r : known)
    if (interiors_overlap(new_region, *r))
      throw RegionOverlap("new region overlaps the certified region");

  TubeEstimate tube;
  const double lipschitz =
      std::max(certificate.lipschitz, lipschitz_for(model, new_region, config, &tube));
  const auto clear_of_known = [&](const Ball& ball) {
    for (const Region* r : known)
      if (!disjoint(ball, *r)) return false;
    return true;
  };

  SynthesisResult result;
  SynthesisReport& report = result.report;
  std::vector<Cell> frontier;
  {
    const std::vector<Ball> grid = initial_grid(new_region, x_star, norm, config, lipschitz);
    for (std::size_t i = 0; i < grid.size(); ++i)
      frontier.push_back({grid[i], stream_key(kExpandKey, i), 0, std::nullopt});
  }
  report.initial_cells = static_cast<int>(frontier.size());

  const std::vector<Anchor> anchors = anchors_of(set);
  std::vector<Pending> added;
  while (!frontier.empty()) {
    std::vector<std::optional<Pending>> passed(frontier.size());
    std::vector<ControlSignal> signals(frontier.size());
    std::vector<char> searched(frontier.size(), 0);
    parallel_for(frontier.size(), config.threads, [&](std::size_t i) {
      const Cell& cell = frontier[i];
      // Cells touching the certified region are only split.
      if (!clear_of_known(cell.ball)) return;
      searched[i] = 1;
      const Attempt attempt = attempt_direct(model, cell.ball, set.region, norm,
                                             config, lipschitz, cell.key,
                                             cell.warm ? &*cell.warm : nullptr);
      signals[i] = attempt.signal;
      if (attempt.outcome.passed) {
        passed[i] = direct_triple(cell.ball, attempt);
        return;
      }
      passed[i] = try_bootstrap(model, cell.ball, attempt.signal, anchors,
                                set.region, norm, config, lipschitz);
    });
    std::vector<Cell> next;
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      const Cell& cell = frontier[i];
      report.searched_cells += searched[i];
      if (passed[i]) {
        added.push_back(std::move(*passed[i]));
        continue;
      }
      if (cell.depth >= config.max_splits) {
        if (searched[i]) report.failed.push_back(cell.ball);
        continue;
      }
      const std::vector<Ball> children = split_ball(cell.ball, norm, 0.0);
      for (std::size_t c = 0; c < children.size(); ++c) {
        if (!intersects(children[c], new_region) ||
            inside_eps(children[c], norm, x_star, config.eps))
          continue;
        std::optional<ControlSignal> warm;
        if (searched[i]) warm = signals[i];
        next.push_back({children[c], child_key(cell.key, static_cast<int>(c)),
                        cell.depth + 1, std::move(warm)});
      }
    }
    frontier = std::move(next);
  }

  AssignmentSet& out = result.assignments;
  out = set;
  out.extensions.push_back(new_region);
  append(out, added);

  // alpha' and tau' per clause; c stays at its original value.
  Certificate& cert = result.certificate;
  cert = certificate;
  cert.lipschitz = lipschitz;
  for (const Pending& p : added) {
    cert.alpha = std::min(cert.alpha, p.alpha);
    cert.tau = p.origin == CellOrigin::kDirect ? std::max(cert.tau, p.tau)
                                               : std::max(cert.tau, certificate.tau + p.tau);
  }
  update_constants(cert);
  cert.covering_samples = config.covering_samples;

  std::vector<Pending> all = pending_of(out);
  finish_report(report, out, cert, all, start);
  cert.covered = report.complete;
  cert.uncovered_samples = static_cast<int>(report.covering.uncovered.size());
  report.certificate = cert;
  report.previous_min_alpha = report.min_alpha;
  report.previous_mean_alpha = report.mean_alpha;
  return result;
}

}  // namespace ncp
