#include "copjoint/model.hpp"

#include <numeric>
#include <sstream>

namespace copjoint {

const char* block_kind_name(BlockKind k) {
  return k == BlockKind::ordinal ? "ordinal" : "multinomial";
}

const char* backbone_name(Backbone b) { return b == Backbone::logit ? "logit" : "reslogit"; }

void validate_spec(const ModelSpec& spec) {
  const auto check_block = [&](const BlockSpec& blk, const char* which) {
    if (blk.categories < 2) {
      std::ostringstream msg;
      msg << which << " block '" << blk.name << "' needs at least 2 categories, got "
          << blk.categories;
      throw ConfigError(msg.str());
    }
    if (blk.features < 0) {
      std::ostringstream msg;
      msg << which << " block '" << blk.name << "' has negative feature count";
      throw ConfigError(msg.str());
    }
    if (blk.depth < 0) {
      std::ostringstream msg;
      msg << which << " block '" << blk.name << "' has negative residual depth";
      throw ConfigError(msg.str());
    }
    if (spec.backbone == Backbone::logit && blk.depth != 0) {
      std::ostringstream msg;
      msg << which << " block '" << blk.name
          << "': residual depth must be 0 under the logit backbone, got " << blk.depth;
      throw ConfigError(msg.str());
    }
  };
  check_block(spec.block_a, "first");
  check_block(spec.block_b, "second");
  if (spec.block_b.kind != BlockKind::ordinal)
    throw ConfigError("second block must be ordinal; only the first block may be multinomial");
}

bool ParameterLayout::has(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return true;
  return false;
}

const LayoutEntry& ParameterLayout::entry(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return e;
  throw DomainError("parameter layout has no slice named '" + name + "'");
}

int ParameterLayout::size_of(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return e.size;
  return 0;
}

std::string ParameterLayout::name_of(int flat_index) const {
  for (const auto& e : entries) {
    if (flat_index >= e.offset && flat_index < e.offset + e.size) {
      std::ostringstream out;
      out << e.name << "[" << (flat_index - e.offset) << "]";
      return out.str();
    }
  }
  std::ostringstream msg;
  msg << "flat index " << flat_index << " outside the layout (total " << total << ")";
  throw DomainError(msg.str());
}

namespace {

void push_entry(ParameterLayout& layout, const std::string& name, int size) {
  if (size <= 0) return;
  layout.entries.push_back({name, layout.total, size});
  layout.total += size;
}

void push_block(ParameterLayout& layout, const BlockSpec& blk, Backbone backbone,
                const std::string& prefix) {
  if (blk.kind == BlockKind::ordinal) {
    push_entry(layout, prefix + ".coef", blk.features);
    if (backbone == Backbone::reslogit) push_entry(layout, prefix + ".head", blk.features);
    push_entry(layout, prefix + ".cut", blk.categories - 1);
    if (backbone == Backbone::reslogit)
      push_entry(layout, prefix + ".stack", blk.depth * blk.features * blk.features);
    return;
  }
  push_entry(layout, prefix + ".coef", (blk.categories - 1) * blk.features);
  if (backbone == Backbone::reslogit)
    push_entry(layout, prefix + ".stack", blk.depth * blk.categories * blk.categories);
}

}  // namespace

ParameterLayout build_layout(const ModelSpec& spec) {
  validate_spec(spec);
  ParameterLayout layout;
  push_block(layout, spec.block_a, spec.backbone, "a");
  push_block(layout, spec.block_b, spec.backbone, "b");
  if (family_has_theta(spec.family)) {
    const int n_theta =
        spec.block_a.kind == BlockKind::multinomial ? spec.block_a.categories : 1;
    push_entry(layout, "copula.eta", n_theta);
  }
  return layout;
}

void layout_assign(const ParameterLayout& layout, const std::string& name,
                   const Eigen::VectorXd& value, Eigen::VectorXd& params) {
  const LayoutEntry& e = layout.entry(name);
  if (value.size() != e.size) {
    std::ostringstream msg;
    msg << "slice '" << name << "' has size " << e.size << ", got " << value.size();
    throw DomainError(msg.str());
  }
  if (params.size() != layout.total) {
    std::ostringstream msg;
    msg << "parameter vector has length " << params.size() << ", layout needs " << layout.total;
    throw DomainError(msg.str());
  }
  params.segment(e.offset, e.size) = value;
}

void validate_model_data(const ModelSpec& spec, const ModelData& data) {
  const Eigen::Index q = data.ya.size();
  if (q < 1) throw DomainError("dataset is empty");
  if (data.yb.size() != q || data.xa.rows() != q || data.xb.rows() != q) {
    std::ostringstream msg;
    msg << "row counts disagree: outcomes " << q << "/" << data.yb.size() << ", features "
        << data.xa.rows() << "/" << data.xb.rows();
    throw DomainError(msg.str());
  }
  if (data.xa.cols() != spec.block_a.features || data.xb.cols() != spec.block_b.features) {
    std::ostringstream msg;
    msg << "feature counts disagree with the spec: got " << data.xa.cols() << "x"
        << data.xb.cols() << ", spec says " << spec.block_a.features << "x"
        << spec.block_b.features;
    throw DomainError(msg.str());
  }
  for (Eigen::Index r = 0; r < q; ++r) {
    if (data.ya[r] < 0 || data.ya[r] >= spec.block_a.categories) {
      std::ostringstream msg;
      msg << "row " << r << ": first-block outcome " << data.ya[r] << " outside [0, "
          << spec.block_a.categories << ")";
      throw DomainError(msg.str());
    }
    if (data.yb[r] < 0 || data.yb[r] >= spec.block_b.categories) {
      std::ostringstream msg;
      msg << "row " << r << ": second-block outcome " << data.yb[r] << " outside [0, "
          << spec.block_b.categories << ")";
      throw DomainError(msg.str());
    }
  }
}

std::vector<Eigen::Index> all_rows(const ModelData& data) {
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(data.size()));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  return rows;
}

}  // namespace copjoint
