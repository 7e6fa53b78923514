#include "chtf/model_io.hpp"

#include <fstream>
#include <json.hpp>

#include "chtf/tnsr_io.hpp"

namespace chtf {

namespace {

using nlohmann::json;

json load_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest");
  if (!in) throw IoError("cannot open manifest in " + dir.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError("bad manifest in " + dir.string() + ": " + e.what());
  }
  return j;
}

void write_manifest(const std::filesystem::path& dir, const json& j) {
  std::ofstream out(dir / "manifest");
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << j.dump(2) << "\n";
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path) {
  DenseTensor t = read_tnsr(path);
  if (t.order() != 2) throw FormatError("expected an order-2 tensor in " + path.string());
  return Eigen::Map<const Eigen::MatrixXd>(t.data(), t.dim(0), t.dim(1));
}

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  DenseTensor t({m.rows(), m.cols()},
                std::vector<double>(m.data(), m.data() + m.size()));
  write_tnsr(path, t);
}

Eigen::VectorXd read_vector(const std::filesystem::path& path) {
  DenseTensor t = read_tnsr(path);
  if (t.order() != 1) throw FormatError("expected an order-1 tensor in " + path.string());
  return vectorize(t);
}

void write_vector(const std::filesystem::path& path, const Eigen::VectorXd& v) {
  write_tnsr(path, DenseTensor({v.size()}, std::vector<double>(v.data(), v.data() + v.size())));
}

json bank_to_json(const SegmentFilterBank& bank) {
  json j;
  j["measurement_dim"] = bank.measurement_dim;
  switch (bank.kind) {
    case BankKind::segmentation: {
      j["kind"] = "segmentation";
      j["regions"] = bank.regions;
      break;
    }
    case BankKind::pyramid: {
      j["kind"] = "pyramid";
      j["width"] = bank.pyramid.width;
      j["height"] = bank.pyramid.height;
      j["levels"] = bank.pyramid.levels;
      j["mode"] = bank.pyramid.mode == PyramidMode::gaussian ? "gaussian" : "laplacian";
      break;
    }
    case BankKind::general:
      throw FormatError("general filter banks have no serialized form");
  }
  return j;
}

SegmentFilterBank bank_from_json(const json& j) {
  const std::string kind = j.at("kind");
  if (kind == "segmentation") {
    std::vector<std::vector<Index>> regions = j.at("regions");
    return make_segmentation_bank(j.at("measurement_dim"), regions);
  }
  if (kind == "pyramid") {
    const std::string mode = j.at("mode");
    return make_pyramid_bank(j.at("width"), j.at("height"), j.at("levels"),
                             mode == "gaussian" ? PyramidMode::gaussian
                                                : PyramidMode::laplacian);
  }
  throw FormatError("unknown bank kind: " + kind);
}

} // namespace

ArchiveType archive_type(const std::filesystem::path& dir) {
  json j = load_manifest(dir);
  const std::string type = j.at("type");
  if (type == "tucker") return ArchiveType::tucker;
  if (type == "hierarchical") return ArchiveType::hierarchical;
  throw FormatError("unknown archive type: " + type);
}

void save_model(const std::filesystem::path& dir, const TuckerModel& model) {
  std::filesystem::create_directories(dir);
  json j;
  j["type"] = "tucker";
  j["order"] = model.order();
  std::vector<Index> dims;
  for (const auto& u : model.mode_matrices) dims.push_back(u.rows());
  j["dims"] = dims;
  j["ranks"] = model.ranks();
  j["mean"] = model.mean.has_value();
  j["sign_convention"] = 1;
  write_manifest(dir, j);

  write_tnsr(dir / "core.tnsr", model.core);
  for (Index m = 0; m < model.order(); ++m)
    write_matrix(dir / ("mode" + std::to_string(m) + ".tnsr"),
                 model.mode_matrices[static_cast<size_t>(m)]);
  if (model.mean) write_vector(dir / "mean.tnsr", *model.mean);
}

TuckerModel load_tucker(const std::filesystem::path& dir) {
  json j = load_manifest(dir);
  if (j.at("type") != "tucker") throw FormatError("not a tucker archive: " + dir.string());
  TuckerModel model;
  model.core = read_tnsr(dir / "core.tnsr");
  const Index order = j.at("order");
  if (model.core.order() != order) throw FormatError("manifest/core order mismatch");
  for (Index m = 0; m < order; ++m)
    model.mode_matrices.push_back(read_matrix(dir / ("mode" + std::to_string(m) + ".tnsr")));
  for (Index m = 0; m < order; ++m) {
    if (model.mode_matrices[static_cast<size_t>(m)].cols() != model.core.dim(m))
      throw FormatError("mode matrix rank mismatch in " + dir.string());
    model.mode_singular_values.push_back(core_slab_norms(model.core, m));
  }
  if (j.at("mean").get<bool>()) model.mean = read_vector(dir / "mean.tnsr");
  return model;
}

void save_model(const std::filesystem::path& dir, const HierarchicalModel& model) {
  std::filesystem::create_directories(dir);
  json j;
  j["type"] = "hierarchical";
  j["dims"] = model.data_dims;
  j["bank"] = bank_to_json(model.bank);
  j["mean"] = model.mean.has_value();
  json segs = json::array();
  for (const Segment& seg : model.segments) {
    json sj;
    sj["active"] = seg.active;
    if (seg.active) sj["ranks"] = seg.ranks();
    segs.push_back(sj);
  }
  j["segments"] = segs;
  j["convergence"] = {{"iterations", model.trace.iterations},
                      {"converged", model.trace.converged},
                      {"loss", model.trace.values},
                      {"rank_deficient", model.rank_deficient_solve}};
  write_manifest(dir, j);

  for (size_t s = 0; s < model.segments.size(); ++s) {
    const Segment& seg = model.segments[s];
    if (!seg.active) continue;
    const std::string stem = "seg" + std::to_string(s);
    write_tnsr(dir / (stem + "_core.tnsr"), seg.core);
    for (size_t c = 0; c < seg.mode_matrices.size(); ++c) {
      write_matrix(dir / (stem + "_mode" + std::to_string(c) + ".tnsr"), seg.mode_matrices[c]);
      write_vector(dir / (stem + "_sigma" + std::to_string(c) + ".tnsr"),
                   seg.mode_singular_values[c]);
    }
  }
  if (model.mean) write_vector(dir / "mean.tnsr", *model.mean);
}

HierarchicalModel load_hierarchical(const std::filesystem::path& dir) {
  json j = load_manifest(dir);
  if (j.at("type") != "hierarchical")
    throw FormatError("not a hierarchical archive: " + dir.string());
  HierarchicalModel model;
  model.data_dims = j.at("dims").get<std::vector<Index>>();
  model.bank = bank_from_json(j.at("bank"));
  const json& conv = j.at("convergence");
  model.trace.iterations = conv.at("iterations");
  model.trace.converged = conv.at("converged");
  model.trace.values = conv.at("loss").get<std::vector<double>>();
  model.rank_deficient_solve = conv.at("rank_deficient");

  const json& segs = j.at("segments");
  const Index order = static_cast<Index>(model.data_dims.size());
  for (size_t s = 0; s < segs.size(); ++s) {
    Segment seg;
    if (segs[s].at("active").get<bool>()) {
      seg.active = true;
      const std::string stem = "seg" + std::to_string(s);
      seg.core = read_tnsr(dir / (stem + "_core.tnsr"));
      if (seg.core.order() != order) throw FormatError("segment core order mismatch");
      for (Index c = 0; c < order; ++c) {
        seg.mode_matrices.push_back(
            read_matrix(dir / (stem + "_mode" + std::to_string(c) + ".tnsr")));
        seg.mode_singular_values.push_back(
            read_vector(dir / (stem + "_sigma" + std::to_string(c) + ".tnsr")));
        if (seg.mode_matrices.back().cols() != seg.core.dim(c))
          throw FormatError("segment mode matrix rank mismatch");
      }
    }
    model.segments.push_back(std::move(seg));
  }
  if (j.at("mean").get<bool>()) model.mean = read_vector(dir / "mean.tnsr");
  return model;
}

void save_ensemble(const std::filesystem::path& dir, const LabeledEnsemble& ensemble) {
  validate_ensemble(ensemble);
  std::filesystem::create_directories(dir);
  write_tnsr(dir / "ensemble.tnsr", ensemble.tensor);
  std::ofstream out(dir / "labels.csv");
  if (!out) throw IoError("cannot write labels.csv in " + dir.string());
  out << "mode,index,label\n";
  for (size_t c = 0; c < ensemble.factor_labels.size(); ++c)
    for (size_t i = 0; i < ensemble.factor_labels[c].size(); ++i)
      out << (c + 1) << "," << i << "," << ensemble.factor_labels[c][i] << "\n";
}

LabeledEnsemble load_ensemble(const std::filesystem::path& dir) {
  LabeledEnsemble ensemble;
  ensemble.tensor = read_tnsr(dir / "ensemble.tnsr");
  std::ifstream in(dir / "labels.csv");
  if (!in) throw IoError("cannot open labels.csv in " + dir.string());
  ensemble.factor_labels.resize(static_cast<size_t>(ensemble.tensor.order() - 1));
  std::string line;
  std::getline(in, line);
  if (line != "mode,index,label") throw FormatError("bad labels.csv header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const size_t c1 = line.find(','), c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw FormatError("bad labels.csv row: " + line);
    const int mode = std::stoi(line.substr(0, c1));
    const size_t index = static_cast<size_t>(std::stoul(line.substr(c1 + 1, c2 - c1 - 1)));
    if (mode < 1 || mode >= ensemble.tensor.order()) throw FormatError("labels.csv mode out of range");
    auto& labels = ensemble.factor_labels[static_cast<size_t>(mode - 1)];
    if (labels.size() <= index) labels.resize(index + 1);
    labels[index] = line.substr(c2 + 1);
  }
  validate_ensemble(ensemble);
  return ensemble;
}

} // namespace chtf
