#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "prophecy/core/program.hpp"

namespace prophecy::analysis {

using core::LabelId;
using core::VarSet;

/// beta: the predicted live set before each label, indexed by LabelId. Total
/// over the labels of the program it was created for.
class AnalysisResults {
 public:
  AnalysisResults() = default;
  explicit AnalysisResults(std::size_t labels) : before_(labels) {}
  explicit AnalysisResults(const core::Program& p) : before_(p.size()) {}

  std::size_t size() const { return before_.size(); }

  VarSet& at(LabelId l) { return before_.at(l); }
  const VarSet& at(LabelId l) const { return before_.at(l); }
  const VarSet& at(const core::Program& p, const core::Label& l) const { return before_.at(p.id_of(l)); }

  /// Pointwise subset order.
  bool below(const AnalysisResults& other) const {
    if (size() != other.size()) return false;
    for (std::size_t i = 0; i < size(); ++i) {
      if (!std::includes(other.before_[i].begin(), other.before_[i].end(), before_[i].begin(), before_[i].end()))
        return false;
    }
    return true;
  }

  friend bool operator==(const AnalysisResults&, const AnalysisResults&) = default;

 private:
  std::vector<VarSet> before_;
};

inline std::string to_string(const VarSet& s) {
  std::string out = "{";
  for (const auto& v : s) {
    if (out.size() > 1) out += ", ";
    out += v;
  }
  return out + "}";
}

/// One line per label: `label  {a, b}`.
inline std::string format_table(const core::Program& p, const AnalysisResults& beta) {
  std::size_t width = 0;
  for (const auto& c : p.commands()) width = std::max(width, c.label.name.size());
  std::string out;
  for (LabelId l = 0; l < p.size(); ++l) {
    const auto& name = p.label(l).name;
    out += name + std::string(width - name.size() + 2, ' ') + to_string(beta.at(l)) + "\n";
  }
  return out;
}

}  // namespace prophecy::analysis
