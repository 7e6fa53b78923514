#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "chtf/bench.hpp"
#include "chtf/model_io.hpp"
#include "chtf/preprocess.hpp"
#include "chtf/synth.hpp"
#include "chtf/tnsr_io.hpp"

namespace chtf::cli {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

Index parse_index(const std::string& s) {
  try {
    size_t used = 0;
    long long v = std::stoll(s, &used);
    if (used != s.size()) throw FormatError("not an integer: " + s);
    return static_cast<Index>(v);
  } catch (const std::logic_error&) {
    throw FormatError("not an integer: " + s);
  }
}

// Bank specs: identity | ranges:a-b,c-d,... | grid:PXxPY@WxH |
// gaussian:L@WxH | laplacian:L@WxH
SegmentFilterBank parse_bank(const std::string& spec, Index dim0) {
  if (spec == "identity") return make_identity_bank(dim0);
  const size_t colon = spec.find(':');
  if (colon == std::string::npos) throw FormatError("bad bank spec: " + spec);
  const std::string kind = spec.substr(0, colon);
  const std::string rest = spec.substr(colon + 1);

  if (kind == "ranges") {
    std::vector<std::vector<Index>> regions;
    for (const std::string& r : split(rest, ',')) {
      const size_t dash = r.find('-');
      if (dash == std::string::npos) throw FormatError("bad range: " + r);
      const Index lo = parse_index(r.substr(0, dash));
      const Index hi = parse_index(r.substr(dash + 1));
      if (lo > hi) throw FormatError("bad range: " + r);
      std::vector<Index> region;
      for (Index i = lo; i <= hi; ++i) region.push_back(i);
      regions.push_back(std::move(region));
    }
    return make_segmentation_bank(dim0, regions);
  }

  const size_t at = rest.find('@');
  if (at == std::string::npos) throw FormatError("bank spec needs @WxH: " + spec);
  const std::string geom = rest.substr(at + 1);
  const size_t x = geom.find('x');
  if (x == std::string::npos) throw FormatError("bad geometry: " + geom);
  const Index width = parse_index(geom.substr(0, x));
  const Index height = parse_index(geom.substr(x + 1));
  if (width * height != dim0)
    throw FormatError("bank geometry does not match the measurement dimension");

  const std::string head = rest.substr(0, at);
  if (kind == "grid") {
    const size_t gx = head.find('x');
    if (gx == std::string::npos) throw FormatError("bad grid: " + head);
    return make_grid_bank(width, height, parse_index(head.substr(0, gx)),
                          parse_index(head.substr(gx + 1)));
  }
  if (kind == "gaussian")
    return make_pyramid_bank(width, height, parse_index(head), PyramidMode::gaussian);
  if (kind == "laplacian")
    return make_pyramid_bank(width, height, parse_index(head), PyramidMode::laplacian);
  throw FormatError("unknown bank kind: " + kind);
}

std::vector<Index> parse_ranks(const std::string& spec) {
  std::vector<Index> ranks;
  if (spec.empty()) return ranks;
  for (const std::string& p : split(spec, ',')) ranks.push_back(parse_index(p));
  return ranks;
}

void write_trace_csv(const fs::path& path, const LossTrace& trace) {
  std::ofstream out = open_out(path);
  out << "iter,loss\n";
  for (size_t i = 0; i < trace.values.size(); ++i)
    out << i << "," << fmt(trace.values[i]) << "\n";
}

void write_roc_csv(const fs::path& path, const std::vector<RocPoint>& roc) {
  std::ofstream out = open_out(path);
  out << "threshold,fpr,tpr\n";
  for (const RocPoint& p : roc)
    out << fmt(p.threshold) << "," << fmt(p.fpr) << "," << fmt(p.tpr) << "\n";
}

// ---- decompose ----------------------------------------------------------

struct DecomposeArgs {
  std::string input, output, bank = "identity", ranks, method = "svd";
  Index max_iters = 50;
  double tol = 0.0; // 0: module default
};

void cmd_decompose(const DecomposeArgs& args) {
  DenseTensor d = read_tnsr(args.input);
  std::vector<Index> ranks = parse_ranks(args.ranks);
  AlsOptions als{args.max_iters, args.tol > 0 ? std::optional<double>(args.tol) : std::nullopt};

  if (args.bank == "identity") {
    TuckerModel model;
    LossTrace trace;
    if (args.method == "als") {
      std::vector<Index> want = ranks;
      if (want.empty())
        for (Index m = 0; m < d.order(); ++m)
          want.push_back(std::min(d.dim(m), d.size() / d.dim(m)));
      model = tucker_als(d, want, als, &trace);
    } else if (args.method == "svd") {
      model = m_mode_svd(d);
      if (!ranks.empty()) model = truncate(model, ranks);
      DenseTensor r = d;
      r -= reconstruct(model);
      const double res = frobenius_norm(r);
      trace.values = {res * res};
      trace.converged = true;
    } else {
      throw FormatError("unknown decomposition method: " + args.method);
    }
    save_model(args.output, model);
    write_trace_csv(fs::path(args.output) / "loss_trace.csv", trace);
    return;
  }

  SegmentFilterBank bank = parse_bank(args.bank, d.dim(0));
  HierarchicalModel model;
  if (bank.disjoint_segmentation()) {
    model = chtf_independent(d, bank);
    if (!ranks.empty()) model = chtf_truncate(model, ranks);
    model.trace.values = {chtf_loss(d, model)};
    model.trace.converged = true;
  } else {
    std::vector<Index> want = ranks;
    if (want.empty()) want.assign(static_cast<size_t>(d.order()), 0);
    model = chtf_als(d, bank, want, als);
  }
  save_model(args.output, model);
  write_trace_csv(fs::path(args.output) / "loss_trace.csv", model.trace);
}

// ---- synth --------------------------------------------------------------

struct SynthArgs {
  std::string output, ranks;
  SynthOptions opts;
  Index test_people = 0;
  Index pairs = 150;
  double occlusion = 0.0;
};

void cmd_synth(const SynthArgs& args) {
  SynthOptions opts = args.opts;
  std::vector<Index> ranks = parse_ranks(args.ranks);
  if (!ranks.empty()) {
    if (ranks.size() != 4) throw FormatError("synth ranks must be R0,RP,RV,RL");
    opts.rank_measurement = ranks[0];
    opts.rank_person = ranks[1];
    opts.rank_view = ranks[2];
    opts.rank_illum = ranks[3];
  }
  SynthResult result = synth_ensemble(opts);
  const fs::path root(args.output);
  save_ensemble(root / "train", result.ensemble);

  fs::create_directories(root / "truth");
  write_tnsr(root / "truth" / "core.tnsr", result.truth.core);
  auto dump_matrix = [&](const char* name, const Eigen::MatrixXd& m) {
    write_tnsr(root / "truth" / name,
               DenseTensor({m.rows(), m.cols()},
                           std::vector<double>(m.data(), m.data() + m.size())));
  };
  dump_matrix("basis.tnsr", result.truth.basis);
  dump_matrix("people.tnsr", result.truth.people);
  dump_matrix("views.tnsr", result.truth.views);
  dump_matrix("illums.tnsr", result.truth.illums);

  if (args.test_people > 0) {
    Rng rng(opts.seed * 0x9e3779b97f4a7c15ull + 0xd1b54a32d192ed03ull);
    Eigen::MatrixXd people = sample_people(args.test_people, opts.rank_person, rng);
    const Index cells = opts.views * opts.illums;
    Eigen::MatrixXd obs(opts.measurements, args.test_people * cells);
    std::ofstream labels = open_out(root / "test_labels.csv");
    labels << "image,person,view,illum\n";
    Index col = 0;
    for (Index p = 0; p < args.test_people; ++p)
      for (Index v = 0; v < opts.views; ++v)
        for (Index l = 0; l < opts.illums; ++l) {
          obs.col(col) = render(result.truth, people.row(p), result.truth.views.row(v),
                                result.truth.illums.row(l));
          labels << col << ",t" << p << ",v" << v << ",l" << l << "\n";
          ++col;
        }
    if (args.occlusion > 0.0) {
      Rng occ(opts.seed * 0xbf58476d1ce4e5b9ull + 0x94d049bb133111ebull);
      for (Index j = 0; j < obs.cols(); ++j)
        obs.col(j) = occlude(obs.col(j), args.occlusion, occ);
    }
    write_tnsr(root / "test.tnsr",
               DenseTensor({obs.rows(), obs.cols()},
                           std::vector<double>(obs.data(), obs.data() + obs.size())));

    // balanced genuine/impostor pairs over the test images
    Rng prng(opts.seed * 0x2545f4914f6cdd1dull + 0x5851f42d4c957f2dull);
    std::ofstream pairs = open_out(root / "pairs.csv");
    pairs << "id_a,id_b,same\n";
    for (Index k = 0; k < args.pairs; ++k) {
      const Index p = static_cast<Index>(prng.below(args.test_people));
      Index c1 = static_cast<Index>(prng.below(cells)), c2;
      do {
        c2 = static_cast<Index>(prng.below(cells));
      } while (c2 == c1);
      pairs << (p * cells + c1) << "," << (p * cells + c2) << ",1\n";
      Index q1 = static_cast<Index>(prng.below(args.test_people)), q2;
      do {
        q2 = static_cast<Index>(prng.below(args.test_people));
      } while (q2 == q1);
      pairs << (q1 * cells + static_cast<Index>(prng.below(cells))) << ","
            << (q2 * cells + static_cast<Index>(prng.below(cells))) << ",0\n";
    }
  }
}

// ---- train --------------------------------------------------------------

struct TrainArgs {
  std::string input, output, bank = "identity", ranks;
  bool center = false;
  Index max_iters = 50;
  double tol = 0.0;
};

void cmd_train(const TrainArgs& args) {
  LabeledEnsemble ensemble = load_ensemble(args.input);
  std::vector<Index> ranks = parse_ranks(args.ranks);

  if (args.bank == "identity") {
    TrainOptions opts;
    opts.center = args.center;
    opts.ranks = ranks;
    GlobalModel model = train_global(ensemble, opts);
    save_model(args.output, model.model);
    return;
  }

  SegmentFilterBank bank = parse_bank(args.bank, ensemble.tensor.dim(0));
  CompositionalOptions opts;
  opts.center = args.center;
  opts.als.max_iters = args.max_iters;
  if (args.tol > 0) opts.als.tol = args.tol;
  if (!ranks.empty()) {
    if (bank.kind == BankKind::pyramid || bank.full_support()) {
      if (static_cast<Index>(ranks.size()) != ensemble.tensor.order() - 1 &&
          static_cast<Index>(ranks.size()) != ensemble.tensor.order())
        throw FormatError("train: rank list arity mismatch");
      // overlapping banks take one shared causal rank tuple
      opts.shared_causal_ranks.assign(ranks.end() - (ensemble.tensor.order() - 1), ranks.end());
    } else {
      opts.total_ranks = ranks;
    }
  }
  CompositionalModel model = train_compositional(ensemble, bank, opts);
  save_model(args.output, model.model);
}

// ---- project ------------------------------------------------------------

struct ProjectArgs {
  std::string model, input, output;
};

std::vector<Signature> signatures_for(const fs::path& model_dir,
                                      const Eigen::MatrixXd& observations) {
  std::vector<Signature> sigs;
  if (archive_type(model_dir) == ArchiveType::tucker) {
    GlobalModel model;
    model.model = load_tucker(model_dir);
    model.core_basis = extended_core(model.model);
    for (Index j = 0; j < observations.cols(); ++j)
      sigs.push_back(make_signature(model, observations.col(j)));
  } else {
    CompositionalModel model = attach_projection(load_hierarchical(model_dir));
    for (Index j = 0; j < observations.cols(); ++j)
      sigs.push_back(make_signature(model, observations.col(j)));
  }
  return sigs;
}

void write_signatures_csv(const fs::path& path, const std::vector<Signature>& sigs) {
  std::ofstream out = open_out(path);
  const Signature& first = sigs.front();
  out << "id";
  for (size_t s = 0; s < first.person.size(); ++s) {
    out << ",w" << s << ",v" << s;
    for (Index j = 0; j < first.person[s].size(); ++j) out << ",s" << s << "_" << j;
  }
  out << "\n";
  for (size_t i = 0; i < sigs.size(); ++i) {
    out << i;
    for (size_t s = 0; s < sigs[i].person.size(); ++s) {
      out << "," << fmt(sigs[i].weights[s]) << "," << (sigs[i].valid[s] ? 1 : 0);
      for (Index j = 0; j < sigs[i].person[s].size(); ++j)
        out << "," << fmt(sigs[i].person[s][j]);
    }
    out << "\n";
  }
}

std::vector<Signature> read_signatures_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw FormatError("empty signatures file");
  std::vector<std::string> cols = split(header, ',');
  if (cols.empty() || cols[0] != "id") throw FormatError("bad signatures header");

  // column plan per segment: weight, valid, then coefficients
  struct SegCols {
    size_t weight, valid;
    std::vector<size_t> coef;
  };
  std::vector<SegCols> plan;
  for (size_t c = 1; c < cols.size(); ++c) {
    if (cols[c][0] == 'w') {
      plan.push_back({c, c + 1, {}});
    } else if (cols[c][0] == 's') {
      plan.back().coef.push_back(c);
    }
  }

  std::vector<Signature> sigs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> vals = split(line, ',');
    if (vals.size() != cols.size()) throw FormatError("bad signatures row: " + line);
    Signature sig;
    for (const SegCols& sc : plan) {
      sig.weights.push_back(std::stod(vals[sc.weight]));
      sig.valid.push_back(vals[sc.valid] == "1");
      Eigen::VectorXd r(static_cast<Index>(sc.coef.size()));
      for (size_t j = 0; j < sc.coef.size(); ++j) r[static_cast<Index>(j)] = std::stod(vals[sc.coef[j]]);
      sig.person.push_back(std::move(r));
    }
    sigs.push_back(std::move(sig));
  }
  if (sigs.empty()) throw FormatError("no signatures in " + path.string());
  return sigs;
}

void cmd_project(const ProjectArgs& args) {
  DenseTensor obs = read_tnsr(args.input);
  if (obs.order() != 2) throw FormatError("project expects an order-2 observations tensor");
  Eigen::MatrixXd m = Eigen::Map<const Eigen::MatrixXd>(obs.data(), obs.dim(0), obs.dim(1));
  std::vector<Signature> sigs = signatures_for(args.model, m);
  write_signatures_csv(args.output, sigs);
}

// ---- verify -------------------------------------------------------------

struct VerifyArgs {
  std::string signatures, signatures_b, pairs, output;
};

void cmd_verify(const VerifyArgs& args) {
  std::vector<Signature> sa = read_signatures_csv(args.signatures);
  std::vector<Signature> sb =
      args.signatures_b.empty() ? sa : read_signatures_csv(args.signatures_b);

  std::ifstream in(args.pairs);
  if (!in) throw IoError("cannot open " + args.pairs);
  std::string line;
  if (!std::getline(in, line) || line != "id_a,id_b,same")
    throw FormatError("bad pairs header in " + args.pairs);
  std::vector<Signature> a, b;
  std::vector<bool> same;
  std::vector<std::pair<Index, Index>> ids;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> vals = split(line, ',');
    if (vals.size() != 3) throw FormatError("bad pairs row: " + line);
    const Index ia = parse_index(vals[0]), ib = parse_index(vals[1]);
    if (ia < 0 || ia >= static_cast<Index>(sa.size()) || ib < 0 ||
        ib >= static_cast<Index>(sb.size()))
      throw FormatError("pair id out of range: " + line);
    a.push_back(sa[static_cast<size_t>(ia)]);
    b.push_back(sb[static_cast<size_t>(ib)]);
    same.push_back(vals[2] == "1");
    ids.emplace_back(ia, ib);
  }
  if (a.empty()) throw FormatError("no pairs in " + args.pairs);

  VerificationResult result = verify_pairs(a, b, same);
  const fs::path root(args.output);
  write_roc_csv(root / "roc.csv", result.roc);
  {
    std::ofstream out = open_out(root / "scores.csv");
    out << "id_a,id_b,same,score,decision\n";
    for (size_t i = 0; i < ids.size(); ++i)
      out << ids[i].first << "," << ids[i].second << "," << (same[i] ? 1 : 0) << ","
          << fmt(result.scores[i]) << "," << (result.decisions[i] ? 1 : 0) << "\n";
  }
  {
    std::ofstream out = open_out(root / "verification.csv");
    out << "pairs,threshold,accuracy,auc\n";
    out << ids.size() << "," << fmt(result.threshold) << "," << fmt(result.accuracy) << ","
        << fmt(result.auc) << "\n";
  }
}

// ---- bench --------------------------------------------------------------

struct BenchArgs {
  std::string output, methods = "pca,tensorfaces,parts";
  BenchConfig cfg;
};

void cmd_bench(const BenchArgs& args) {
  BenchConfig cfg = args.cfg;
  cfg.methods.clear();
  for (const std::string& name : split(args.methods, ',')) {
    std::optional<Method> m = parse_method(name);
    if (!m) throw FormatError("unknown method: " + name);
    cfg.methods.push_back(*m);
  }
  BenchmarkReport report = run_benchmark(cfg);

  const fs::path root(args.output);
  {
    std::ofstream out = open_out(root / "report.csv");
    out << "method,accuracy_mean,accuracy_std,auc_mean,runtime_sec,pair_hash\n";
    for (const MethodReport& row : report.rows)
      out << method_name(row.method) << "," << fmt(row.accuracy_mean) << ","
          << fmt(row.accuracy_std) << "," << fmt(row.auc_mean) << ","
          << fmt(row.runtime_seconds) << "," << report.pair_hash << "\n";
  }
  {
    std::ofstream out = open_out(root / "per_seed.csv");
    out << "method,rep,accuracy,auc\n";
    for (const MethodReport& row : report.rows)
      for (size_t r = 0; r < row.per_seed.size(); ++r)
        out << method_name(row.method) << "," << r << "," << fmt(row.per_seed[r].accuracy)
            << "," << fmt(row.per_seed[r].auc) << "\n";
  }
  for (const MethodReport& row : report.rows)
    write_roc_csv(root / ("roc_" + method_name(row.method) + ".csv"), row.roc);
}

} // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"compositional hierarchical tensor factorization toolkit"};
  app.require_subcommand(1);

  DecomposeArgs dec;
  CLI::App* decompose = app.add_subcommand("decompose", "factorize a TNSR tensor");
  decompose->set_config("--config");
  decompose->add_option("--input", dec.input)->required();
  decompose->add_option("--output", dec.output)->required();
  decompose->add_option("--bank", dec.bank);
  decompose->add_option("--ranks", dec.ranks);
  decompose->add_option("--method", dec.method);
  decompose->add_option("--max-iters", dec.max_iters);
  decompose->add_option("--tol", dec.tol);

  SynthArgs syn;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic labeled ensemble");
  synth->set_config("--config");
  synth->add_option("--output", syn.output)->required();
  synth->add_option("--seed", syn.opts.seed);
  synth->add_option("--people", syn.opts.people);
  synth->add_option("--views", syn.opts.views);
  synth->add_option("--illums", syn.opts.illums);
  synth->add_option("--measurements", syn.opts.measurements);
  synth->add_option("--width", syn.opts.width);
  synth->add_option("--height", syn.opts.height);
  synth->add_option("--ranks", syn.ranks);
  synth->add_option("--noise", syn.opts.noise);
  synth->add_option("--concentration", syn.opts.concentration);
  synth->add_option("--test-people", syn.test_people);
  synth->add_option("--pairs", syn.pairs);
  synth->add_option("--occlusion", syn.occlusion);

  TrainArgs tra;
  CLI::App* train = app.add_subcommand("train", "train a recognition model on an ensemble");
  train->set_config("--config");
  train->add_option("--input", tra.input)->required();
  train->add_option("--output", tra.output)->required();
  train->add_option("--bank", tra.bank);
  train->add_option("--ranks", tra.ranks);
  train->add_flag("--center", tra.center);
  train->add_option("--max-iters", tra.max_iters);
  train->add_option("--tol", tra.tol);

  ProjectArgs pro;
  CLI::App* project = app.add_subcommand("project", "project observations into signatures");
  project->set_config("--config");
  project->add_option("--model", pro.model)->required();
  project->add_option("--input", pro.input)->required();
  project->add_option("--output", pro.output)->required();

  VerifyArgs ver;
  CLI::App* verify = app.add_subcommand("verify", "verify signature pairs");
  verify->set_config("--config");
  verify->add_option("--signatures", ver.signatures)->required();
  verify->add_option("--signatures-b", ver.signatures_b);
  verify->add_option("--pairs", ver.pairs)->required();
  verify->add_option("--output", ver.output)->required();

  BenchArgs ben;
  CLI::App* bench = app.add_subcommand("bench", "occlusion-robustness benchmark");
  bench->set_config("--config");
  bench->add_option("--output", ben.output)->required();
  bench->add_option("--method", ben.methods);
  bench->add_option("--reps", ben.cfg.reps);
  bench->add_option("--seed", ben.cfg.synth.seed);
  bench->add_option("--occlusion", ben.cfg.occlusion);
  bench->add_option("--people", ben.cfg.synth.people);
  bench->add_option("--test-people", ben.cfg.test_people);
  bench->add_option("--views", ben.cfg.synth.views);
  bench->add_option("--illums", ben.cfg.synth.illums);
  bench->add_option("--measurements", ben.cfg.synth.measurements);
  bench->add_option("--width", ben.cfg.synth.width);
  bench->add_option("--height", ben.cfg.synth.height);
  bench->add_option("--noise", ben.cfg.synth.noise);
  bench->add_option("--pairs", ben.cfg.pairs_per_class);
  bench->add_option("--parts-x", ben.cfg.parts_x);
  bench->add_option("--parts-y", ben.cfg.parts_y);
  bench->add_option("--pyramid-levels", ben.cfg.pyramid_levels);
  bench->add_option("--pca-rank", ben.cfg.pca_rank);
  bench->add_option("--threads", ben.cfg.threads);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (decompose->parsed()) cmd_decompose(dec);
    if (synth->parsed()) cmd_synth(syn);
    if (train->parsed()) cmd_train(tra);
    if (project->parsed()) cmd_project(pro);
    if (verify->parsed()) cmd_verify(ver);
    if (bench->parsed()) cmd_bench(ben);
    return 0;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) { // shape and rank misuse
    std::cerr << "format error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

} // namespace chtf::cli
