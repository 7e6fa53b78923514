#include "chtf/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <thread>

#include "chtf/filter_bank.hpp"

namespace chtf {

namespace {

struct PairRef {
  Index a_image, b_image;
  bool same;
};

struct SeedTask {
  SynthResult train;
  std::vector<Eigen::VectorXd> images; // occluded test observations
  std::vector<PairRef> pairs;
};

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) {
    h ^= (v >> (8 * b)) & 0xff;
    h *= 0x100000001b3ull;
  }
  return h;
}

SeedTask build_seed_task(const BenchConfig& cfg, Index rep, std::uint64_t& pair_hash) {
  SynthOptions synth = cfg.synth;
  synth.seed = cfg.synth.seed + static_cast<std::uint64_t>(rep);
  SeedTask task;
  task.train = synth_ensemble(synth);

  Rng rng(synth.seed * 0x9e3779b97f4a7c15ull + 0xd1b54a32d192ed03ull);
  Eigen::MatrixXd test_people = sample_people(cfg.test_people, synth.rank_person, rng);
  const Index cells = synth.views * synth.illums;

  std::map<std::pair<Index, Index>, Index> image_index; // (person, cell) -> image
  auto image_of = [&](Index person, Index cell) {
    auto it = image_index.find({person, cell});
    if (it != image_index.end()) return it->second;
    const Index v = cell / synth.illums, l = cell % synth.illums;
    Eigen::VectorXd img = render(task.train.truth, test_people.row(person),
                                 task.train.truth.views.row(v),
                                 task.train.truth.illums.row(l));
    const Index idx = static_cast<Index>(task.images.size());
    task.images.push_back(std::move(img));
    image_index.emplace(std::make_pair(person, cell), idx);
    return idx;
  };

  for (Index k = 0; k < cfg.pairs_per_class; ++k) {
    // one genuine and one impostor pair, interleaved so the
    // calibration/evaluation halves stay balanced
    const Index p = static_cast<Index>(rng.below(cfg.test_people));
    Index c1 = static_cast<Index>(rng.below(cells)), c2;
    do {
      c2 = static_cast<Index>(rng.below(cells));
    } while (c2 == c1);
    task.pairs.push_back({image_of(p, c1), image_of(p, c2), true});
    pair_hash = fnv1a(pair_hash, static_cast<std::uint64_t>(p));
    pair_hash = fnv1a(pair_hash, static_cast<std::uint64_t>(c1 * cells + c2));

    Index q1 = static_cast<Index>(rng.below(cfg.test_people)), q2;
    do {
      q2 = static_cast<Index>(rng.below(cfg.test_people));
    } while (q2 == q1);
    const Index d1 = static_cast<Index>(rng.below(cells));
    const Index d2 = static_cast<Index>(rng.below(cells));
    task.pairs.push_back({image_of(q1, d1), image_of(q2, d2), false});
    pair_hash = fnv1a(pair_hash, static_cast<std::uint64_t>(q1 * cfg.test_people + q2));
    pair_hash = fnv1a(pair_hash, static_cast<std::uint64_t>(d1 * cells + d2));
  }

  if (cfg.occlusion > 0.0) {
    Rng occ(synth.seed * 0xbf58476d1ce4e5b9ull + 0x94d049bb133111ebull);
    for (Eigen::VectorXd& img : task.images) img = occlude(img, cfg.occlusion, occ);
  }
  return task;
}

std::vector<Signature> pca_signatures(const BenchConfig& cfg, const SeedTask& task) {
  Eigen::MatrixXd obs = matrixize(task.train.ensemble.tensor, 0);
  const Index rank = std::min({cfg.pca_rank, obs.rows(), obs.cols()});
  PcaModel model = pca_baseline(obs, rank);
  std::vector<Signature> sigs;
  sigs.reserve(task.images.size());
  for (const Eigen::VectorXd& img : task.images) {
    Eigen::VectorXd coef = pca_coefficients(model, img);
    const double n = coef.norm();
    Signature sig;
    sig.person = {n > 0 ? Eigen::VectorXd(coef / n) : coef};
    sig.weights = {1.0};
    sig.valid = {true};
    sigs.push_back(std::move(sig));
  }
  return sigs;
}

std::vector<Signature> model_signatures(const GlobalModel& model,
                                        const std::vector<Eigen::VectorXd>& images) {
  std::vector<Signature> sigs;
  sigs.reserve(images.size());
  for (const auto& img : images) sigs.push_back(make_signature(model, img));
  return sigs;
}

std::vector<Signature> model_signatures(const CompositionalModel& model,
                                        const std::vector<Eigen::VectorXd>& images) {
  std::vector<Signature> sigs;
  sigs.reserve(images.size());
  for (const auto& img : images) sigs.push_back(make_signature(model, img));
  return sigs;
}

void make_uniform_weights(CompositionalModel& model) {
  Index active = 0;
  for (const Segment& s : model.model.segments)
    if (s.active) ++active;
  if (active == 0) return;
  for (size_t s = 0; s < model.weights.size(); ++s)
    model.weights[s] = model.model.segments[s].active ? 1.0 / active : 0.0;
}

std::vector<Signature> method_signatures(Method method, const BenchConfig& cfg,
                                         const SeedTask& task) {
  const SynthOptions& synth = cfg.synth;
  switch (method) {
    case Method::pca:
      return pca_signatures(cfg, task);
    case Method::global_tensorfaces: {
      GlobalModel model = train_global(task.train.ensemble);
      return model_signatures(model, task.images);
    }
    case Method::parts: {
      SegmentFilterBank bank =
          make_grid_bank(synth.width, synth.height, cfg.parts_x, cfg.parts_y);
      CompositionalModel model = train_compositional(task.train.ensemble, bank, {});
      make_uniform_weights(model);
      return model_signatures(model, task.images);
    }
    case Method::gaussian:
    case Method::gaussian_weighted:
    case Method::laplacian:
    case Method::laplacian_weighted: {
      const bool laplacian =
          method == Method::laplacian || method == Method::laplacian_weighted;
      const bool weighted =
          method == Method::gaussian_weighted || method == Method::laplacian_weighted;
      SegmentFilterBank bank =
          make_pyramid_bank(synth.width, synth.height, cfg.pyramid_levels,
                            laplacian ? PyramidMode::laplacian : PyramidMode::gaussian);
      CompositionalOptions opts;
      opts.shared_causal_ranks = {synth.rank_person, synth.rank_view, synth.rank_illum};
      CompositionalModel model = train_compositional(task.train.ensemble, bank, opts);
      if (!weighted) make_uniform_weights(model);
      return model_signatures(model, task.images);
    }
  }
  throw ShapeError("unknown method");
}

} // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::pca: return "pca";
    case Method::global_tensorfaces: return "tensorfaces";
    case Method::parts: return "parts";
    case Method::gaussian: return "gaussian";
    case Method::gaussian_weighted: return "gaussian-weighted";
    case Method::laplacian: return "laplacian";
    case Method::laplacian_weighted: return "laplacian-weighted";
  }
  return "?";
}

std::optional<Method> parse_method(const std::string& name) {
  for (Method m : {Method::pca, Method::global_tensorfaces, Method::parts, Method::gaussian,
                   Method::gaussian_weighted, Method::laplacian, Method::laplacian_weighted})
    if (method_name(m) == name) return m;
  return std::nullopt;
}

BenchmarkReport run_benchmark(const BenchConfig& config) {
  if (config.reps < 1) throw ShapeError("run_benchmark: reps must be >= 1");
  if (config.methods.empty()) throw ShapeError("run_benchmark: no methods selected");
  if (config.occlusion < 0.0 || config.occlusion > 1.0)
    throw ShapeError("run_benchmark: occlusion out of range");

  Index threads = std::max<Index>(1, config.threads);
  if (const char* env = std::getenv("CHTF_THREADS"))
    threads = std::max<Index>(1, std::min<Index>(threads, std::atoi(env)));
  threads = std::min<Index>(threads, config.reps);

  // pair lists are derived from the seed alone, so the digest can be
  // computed up front; every method sees the identical lists
  std::uint64_t pair_hash = 0xcbf29ce484222325ull;

  struct RepResult {
    std::vector<SeedOutcome> by_method;
    std::vector<double> seconds;
    std::vector<RocPoint> roc_first; // only filled for rep 0
  };
  std::vector<RepResult> reps(static_cast<size_t>(config.reps));

  std::vector<std::uint64_t> hash_by_rep(static_cast<size_t>(config.reps), 0);
  auto run_rep = [&](Index rep) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    SeedTask task = build_seed_task(config, rep, h);
    hash_by_rep[static_cast<size_t>(rep)] = h;

    std::vector<bool> same;
    same.reserve(task.pairs.size());
    for (const PairRef& p : task.pairs) same.push_back(p.same);

    RepResult& out = reps[static_cast<size_t>(rep)];
    out.by_method.resize(config.methods.size());
    out.seconds.resize(config.methods.size(), 0.0);
    for (size_t mi = 0; mi < config.methods.size(); ++mi) {
      const auto start = std::chrono::steady_clock::now();
      std::vector<Signature> sigs = method_signatures(config.methods[mi], config, task);
      std::vector<Signature> a, b;
      a.reserve(task.pairs.size());
      b.reserve(task.pairs.size());
      for (const PairRef& p : task.pairs) {
        a.push_back(sigs[static_cast<size_t>(p.a_image)]);
        b.push_back(sigs[static_cast<size_t>(p.b_image)]);
      }
      VerificationResult v = verify_pairs(a, b, same);
      out.by_method[mi] = {v.accuracy, v.auc};
      out.seconds[mi] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (rep == 0) out.roc_first = v.roc;
    }
  };

  if (threads <= 1) {
    for (Index rep = 0; rep < config.reps; ++rep) run_rep(rep);
  } else {
    std::vector<std::thread> pool;
    for (Index w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (Index rep = w; rep < config.reps; rep += threads) run_rep(rep);
      });
    for (auto& t : pool) t.join();
  }

  for (std::uint64_t h : hash_by_rep) pair_hash = fnv1a(pair_hash, h);

  BenchmarkReport report;
  report.pair_hash = pair_hash;
  for (size_t mi = 0; mi < config.methods.size(); ++mi) {
    MethodReport row;
    row.method = config.methods[mi];
    double acc = 0, auc = 0;
    for (const RepResult& r : reps) {
      row.per_seed.push_back(r.by_method[mi]);
      acc += r.by_method[mi].accuracy;
      auc += r.by_method[mi].auc;
      row.runtime_seconds += r.seconds[mi];
    }
    row.accuracy_mean = acc / config.reps;
    row.auc_mean = auc / config.reps;
    double var = 0;
    for (const SeedOutcome& s : row.per_seed) {
      const double d = s.accuracy - row.accuracy_mean;
      var += d * d;
    }
    row.accuracy_std = config.reps > 1 ? std::sqrt(var / (config.reps - 1)) : 0.0;
    row.roc = reps[0].roc_first;
    report.rows.push_back(std::move(row));
  }
  return report;
}

} // namespace chtf
