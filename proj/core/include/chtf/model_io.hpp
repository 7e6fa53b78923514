#pragma once

#include <filesystem>

#include "chtf/hierarchy.hpp"
#include "chtf/recognition.hpp"
#include "chtf/tucker.hpp"

namespace chtf {

// Model archives are directories holding a JSON `manifest` plus one TNSR
// file per tensor: core.tnsr and mode<m>.tnsr for a flat model, or
// seg<k>_core.tnsr / seg<k>_mode<c>.tnsr per segment for a hierarchical
// one.  Selector banks serialize as index-set lists, pyramid banks as
// their parameters; dense operators are never written.

enum class ArchiveType { tucker, hierarchical };

ArchiveType archive_type(const std::filesystem::path& dir);

void save_model(const std::filesystem::path& dir, const TuckerModel& model);
TuckerModel load_tucker(const std::filesystem::path& dir);

void save_model(const std::filesystem::path& dir, const HierarchicalModel& model);
HierarchicalModel load_hierarchical(const std::filesystem::path& dir);

// Ensembles persist as ensemble.tnsr plus labels.csv (mode,index,label).
void save_ensemble(const std::filesystem::path& dir, const LabeledEnsemble& ensemble);
LabeledEnsemble load_ensemble(const std::filesystem::path& dir);

} // namespace chtf
