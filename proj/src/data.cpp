#include "copjoint/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "copjoint/math.hpp"

namespace copjoint {

namespace {

template <class... Parts>
std::string describe(const Parts&... parts) {
  std::ostringstream msg;
  (msg << ... << parts);
  return msg.str();
}

}  // namespace

namespace {

std::string trim(const std::string& s) {
  const auto from = s.find_first_not_of(" \t\r");
  if (from == std::string::npos) return "";
  const auto to = s.find_last_not_of(" \t\r");
  return s.substr(from, to - from + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

bool parse_number(const std::string& text, double& out) {
  if (text.empty()) return false;
  char* end = nullptr;
  out = std::strtod(text.c_str(), &end);
  return end == text.c_str() + text.size() && std::isfinite(out);
}

// labels sort numerically when every one parses as a number, else as text;
// equal numeric values fall back to text order so the map stays total
std::vector<std::string> sorted_labels(const std::vector<std::string>& raw) {
  std::vector<std::string> labels = raw;
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  std::vector<double> numeric(labels.size());
  bool all_numeric = true;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (!parse_number(labels[i], numeric[i])) {
      all_numeric = false;
      break;
    }
  if (all_numeric) {
    std::vector<std::size_t> order(labels.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (numeric[a] != numeric[b]) return numeric[a] < numeric[b];
      return labels[a] < labels[b];
    });
    std::vector<std::string> out(labels.size());
    for (std::size_t i = 0; i < order.size(); ++i) out[i] = labels[order[i]];
    return out;
  }
  return labels;
}

}  // namespace

LoadResult load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DomainError(describe("cannot open '", path, "'"));

  std::string line;
  if (!std::getline(in, line)) throw DomainError(describe("'", path, "' is empty"));
  const std::vector<std::string> header = split_fields(line);

  auto column_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw DomainError(describe("column '", name, "' not found in '", path, "'"));
    return static_cast<std::size_t>(it - header.begin());
  };

  std::vector<std::size_t> feature_cols;
  for (const auto& name : schema.features) feature_cols.push_back(column_of(name));
  const std::size_t col_a = column_of(schema.outcome_a);
  const std::size_t col_b = column_of(schema.outcome_b);
  std::vector<bool> is_indicator(schema.features.size(), false);
  for (const auto& name : schema.indicators) {
    const auto it = std::find(schema.features.begin(), schema.features.end(), name);
    if (it == schema.features.end())
      throw DomainError(describe("indicator '", name, "' is not a schema feature"));
    is_indicator[static_cast<std::size_t>(it - schema.features.begin())] = true;
  }

  LoadResult result;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> raw_a, raw_b;
  long row_number = 0;
  bool saw_data = false;
  while (std::getline(in, line)) {
    ++row_number;
    if (trim(line).empty()) continue;
    saw_data = true;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != header.size()) {
      std::ostringstream msg;
      msg << "row " << row_number << ": expected " << header.size() << " fields, got "
          << fields.size();
      result.rejected.push_back(msg.str());
      continue;
    }
    std::vector<double> values(feature_cols.size());
    bool ok = true;
    for (std::size_t c = 0; c < feature_cols.size(); ++c) {
      const std::string& text = fields[feature_cols[c]];
      if (!parse_number(text, values[c])) {
        std::ostringstream msg;
        msg << "row " << row_number << ", column '" << schema.features[c]
            << "': cannot parse '" << text << "' as a number";
        result.rejected.push_back(msg.str());
        ok = false;
        break;
      }
      if (is_indicator[c] && values[c] != 0.0 && values[c] != 1.0) {
        std::ostringstream msg;
        msg << "row " << row_number << ", column '" << schema.features[c]
            << "': indicator value '" << text << "' is not 0 or 1";
        result.rejected.push_back(msg.str());
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    if (fields[col_a].empty() || fields[col_b].empty()) {
      std::ostringstream msg;
      msg << "row " << row_number << ": empty outcome";
      result.rejected.push_back(msg.str());
      continue;
    }
    rows.push_back(std::move(values));
    raw_a.push_back(fields[col_a]);
    raw_b.push_back(fields[col_b]);
  }
  if (!saw_data) throw DomainError(describe("'", path, "' has no data rows"));
  if (rows.empty())
    throw DomainError(describe("'", path, "' has no usable rows (",
                               result.rejected.size(), " rejected)"));

  Dataset& data = result.data;
  data.feature_names = schema.features;
  data.features.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(feature_cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      data.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];

  data.labels_a = sorted_labels(raw_a);
  data.labels_b = sorted_labels(raw_b);
  auto index_of = [](const std::vector<std::string>& labels, const std::string& label) {
    const auto it = std::find(labels.begin(), labels.end(), label);
    return static_cast<int>(it - labels.begin());
  };
  data.outcome_a.resize(static_cast<Eigen::Index>(rows.size()));
  data.outcome_b.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    data.outcome_a[static_cast<Eigen::Index>(r)] = index_of(data.labels_a, raw_a[r]);
    data.outcome_b[static_cast<Eigen::Index>(r)] = index_of(data.labels_b, raw_b[r]);
  }
  return result;
}

ModelData to_model_data(const Dataset& data, const std::vector<std::string>& features_a,
                        const std::vector<std::string>& features_b) {
  auto column_of = [&](const std::string& name) {
    const auto it =
        std::find(data.feature_names.begin(), data.feature_names.end(), name);
    if (it == data.feature_names.end())
      throw ConfigError(describe("feature '", name, "' is not in the dataset"));
    return static_cast<Eigen::Index>(it - data.feature_names.begin());
  };
  ModelData out;
  const Eigen::Index q = data.features.rows();
  out.xa.resize(q, static_cast<Eigen::Index>(features_a.size()));
  out.xb.resize(q, static_cast<Eigen::Index>(features_b.size()));
  for (std::size_t c = 0; c < features_a.size(); ++c)
    out.xa.col(static_cast<Eigen::Index>(c)) = data.features.col(column_of(features_a[c]));
  for (std::size_t c = 0; c < features_b.size(); ++c)
    out.xb.col(static_cast<Eigen::Index>(c)) = data.features.col(column_of(features_b[c]));
  out.ya = data.outcome_a;
  out.yb = data.outcome_b;
  return out;
}

std::vector<double> read_numeric_column(const std::string& path, const std::string& column) {
  std::ifstream in(path);
  if (!in) throw DomainError(describe("cannot open '", path, "'"));
  std::string line;
  if (!std::getline(in, line)) throw DomainError(describe("'", path, "' is empty"));
  const std::vector<std::string> header = split_fields(line);
  const auto it = std::find(header.begin(), header.end(), column);
  if (it == header.end())
    throw DomainError(describe("column '", column, "' not found in '", path, "'"));
  const std::size_t col = static_cast<std::size_t>(it - header.begin());

  std::vector<double> values;
  long row_number = 0;
  while (std::getline(in, line)) {
    ++row_number;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != header.size())
      throw DomainError(describe("row ", row_number, ": expected ", header.size(),
                                 " fields, got ", fields.size()));
    double value = 0.0;
    if (!parse_number(fields[col], value))
      throw DomainError(describe("row ", row_number, ", column '", column,
                                 "': cannot parse '", fields[col], "' as a number"));
    values.push_back(value);
  }
  if (values.empty()) throw DomainError(describe("'", path, "' has no data rows"));
  return values;
}

namespace {

// within-class sum of squared deviations of sorted[i..j], from prefix sums;
// both the dynamic program and any reference enumeration must use this exact
// expression for ties to agree bitwise
double segment_cost(const std::vector<double>& s1, const std::vector<double>& s2,
                    std::size_t i, std::size_t j) {
  const double sum = s1[j + 1] - s1[i];
  const double sq = s2[j + 1] - s2[i];
  const double len = static_cast<double>(j - i + 1);
  return sq - sum * sum / len;
}

}  // namespace

JenksResult jenks_breaks(const std::vector<double>& values, int k) {
  if (k < 2) throw DomainError(describe("jenks_breaks needs k >= 2, got ", k));
  std::vector<double> x = values;
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  std::size_t distinct = n == 0 ? 0 : 1;
  for (std::size_t i = 1; i < n; ++i)
    if (x[i] != x[i - 1]) ++distinct;
  if (distinct < static_cast<std::size_t>(k))
    throw DomainError(describe("jenks_breaks needs at least ", k, " distinct values, got ", distinct));

  std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    s1[i + 1] = s1[i] + x[i];
    s2[i + 1] = s2[i] + x[i] * x[i];
  }

  // g[c][i]: optimal cost of splitting x[i..n-1] into c classes
  const std::size_t kk = static_cast<std::size_t>(k);
  std::vector<std::vector<double>> g(kk + 1,
                                     std::vector<double>(n + 1, std::numeric_limits<double>::infinity()));
  for (std::size_t i = 0; i < n; ++i) g[1][i] = segment_cost(s1, s2, i, n - 1);
  for (std::size_t c = 2; c <= kk; ++c)
    for (std::size_t i = 0; i + c <= n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t b = i; b + c <= n; ++b) {
        const double cost = segment_cost(s1, s2, i, b) + g[c - 1][b + 1];
        if (cost < best) best = cost;
      }
      g[c][i] = best;
    }

  // forward reconstruction; the smallest boundary achieving the optimum at
  // each step yields the lexicographically smallest break vector
  JenksResult result;
  result.within_class_ss = g[kk][0];
  std::size_t i = 0;
  for (std::size_t c = kk; c >= 2; --c) {
    for (std::size_t b = i; b + c <= n; ++b) {
      if (segment_cost(s1, s2, i, b) + g[c - 1][b + 1] == g[c][i]) {
        result.thresholds.push_back(x[b]);
        result.counts.push_back(static_cast<Eigen::Index>(b - i + 1));
        i = b + 1;
        break;
      }
    }
  }
  result.counts.push_back(static_cast<Eigen::Index>(n - i));
  return result;
}

namespace {

std::uint64_t merge_count(std::vector<double>& v, std::vector<double>& tmp,
                          std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inversions = merge_count(v, tmp, lo, mid) + merge_count(v, tmp, mid, hi);
  std::size_t a = lo, b = mid, out = lo;
  while (a < mid && b < hi) {
    if (v[a] <= v[b]) {
      tmp[out++] = v[a++];
    } else {
      inversions += mid - a;
      tmp[out++] = v[b++];
    }
  }
  while (a < mid) tmp[out++] = v[a++];
  while (b < hi) tmp[out++] = v[b++];
  std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo),
            tmp.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inversions;
}

}  // namespace

double empirical_kendall_tau(const Eigen::MatrixXd& uv) {
  const Eigen::Index n = uv.rows();
  if (n < 2 || uv.cols() != 2)
    throw DomainError("empirical_kendall_tau needs an n x 2 matrix with n >= 2");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (uv(a, 0) != uv(b, 0)) return uv(a, 0) < uv(b, 0);
    return uv(a, 1) < uv(b, 1);
  });
  std::vector<double> second(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < second.size(); ++i) second[i] = uv(order[i], 1);
  std::vector<double> tmp(second.size());
  const std::uint64_t inversions = merge_count(second, tmp, 0, second.size());
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return 1.0 - static_cast<double>(inversions) / pairs * 2.0;
}

namespace {

int level_from_uniform(const Eigen::VectorXd& cumulative, double u) {
  const int k = static_cast<int>(cumulative.size()) - 1;
  for (int level = 0; level < k; ++level)
    if (u <= cumulative[level + 1]) return level;
  return k - 1;
}

}  // namespace

SimulationResult simulate(const SyntheticTruth& truth, Eigen::Index q) {
  if (q < 1) throw DomainError(describe("simulate needs q >= 1, got ", q));
  validate_spec(truth.spec);
  const ModelSpec& spec = truth.spec;
  const ParameterLayout layout = build_layout(spec);
  if (truth.params.size() != layout.total)
    throw ConfigError(describe("truth parameters have length ", truth.params.size(), ", the layout needs ", layout.total));
  const Eigen::Index da = spec.block_a.features;
  const Eigen::Index db = spec.block_b.features;
  if (truth.scheme == CovariateScheme::shared_confounder && (da < 2 || db < 2))
    throw ConfigError("the shared-confounder scheme needs at least 2 features per block");

  const bool ordinal_first = spec.block_a.kind == BlockKind::ordinal;
  double theta = 0.0;
  if (ordinal_first && family_has_theta(spec.family))
    theta = theta_from_eta(spec.family,
                           Eigen::VectorXd(layout_slice(layout, "copula.eta", truth.params))[0]);

  SimulationResult result;
  ModelData& data = result.data;
  data.xa.resize(q, da);
  data.xb.resize(q, db);
  data.ya.resize(q);
  data.yb.resize(q);
  result.latent.resize(ordinal_first ? q : 0, 2);

  for (Eigen::Index r = 0; r < q; ++r) {
    Rng rng = Rng::split(truth.seed, static_cast<std::uint64_t>(r));

    // covariates first, in column order, block a before block b
    if (truth.scheme == CovariateScheme::independent) {
      for (Eigen::Index c = 0; c < da; ++c)
        data.xa(r, c) = c % 2 == 0 ? normal_quantile(rng.uniform())
                                   : (rng.uniform() < 0.5 ? 1.0 : 0.0);
      for (Eigen::Index c = 0; c < db; ++c)
        data.xb(r, c) = c % 2 == 0 ? normal_quantile(rng.uniform())
                                   : (rng.uniform() < 0.5 ? 1.0 : 0.0);
    } else {
      const double z = normal_quantile(rng.uniform());
      data.xa(r, 0) = z;
      data.xb(r, 0) = z;
      for (Eigen::Index c = 1; c + 1 < da; ++c)
        data.xa(r, c) = c % 2 == 0 ? normal_quantile(rng.uniform())
                                   : (rng.uniform() < 0.5 ? 1.0 : 0.0);
      for (Eigen::Index c = 1; c + 1 < db; ++c)
        data.xb(r, c) = c % 2 == 0 ? normal_quantile(rng.uniform())
                                   : (rng.uniform() < 0.5 ? 1.0 : 0.0);
      data.xa(r, da - 1) = z * z - 1.0;
      data.xb(r, db - 1) = z * z - 1.0;
    }

    const Eigen::VectorXd xa = data.xa.row(r).transpose();
    const Eigen::VectorXd xb = data.xb.row(r).transpose();
    if (ordinal_first) {
      const auto [u, v] = sample_pair(CopulaSpec{spec.family, theta}, rng);
      result.latent(r, 0) = u;
      result.latent(r, 1) = v;
      data.ya[r] = level_from_uniform(
          block_cumulative(spec.block_a, spec.backbone, "a", layout, truth.params, xa), u);
      data.yb[r] = level_from_uniform(
          block_cumulative(spec.block_b, spec.backbone, "b", layout, truth.params, xb), v);
    } else {
      const Eigen::MatrixXd cells = joint_cells(spec, layout, truth.params, xa, xb);
      const double w = rng.uniform();
      double acc = 0.0;
      Eigen::Index pick_a = cells.rows() - 1, pick_b = cells.cols() - 1;
      bool picked = false;
      for (Eigen::Index a = 0; a < cells.rows() && !picked; ++a)
        for (Eigen::Index b = 0; b < cells.cols() && !picked; ++b) {
          acc += cells(a, b);
          if (w <= acc) {
            pick_a = a;
            pick_b = b;
            picked = true;
          }
        }
      data.ya[r] = static_cast<int>(pick_a);
      data.yb[r] = static_cast<int>(pick_b);
    }
  }
  return result;
}

std::vector<std::string> canonical_feature_names(const ModelSpec& spec) {
  std::vector<std::string> names;
  for (Eigen::Index c = 0; c < spec.block_a.features; ++c)
    names.push_back("a_x" + std::to_string(c + 1));
  for (Eigen::Index c = 0; c < spec.block_b.features; ++c)
    names.push_back("b_x" + std::to_string(c + 1));
  return names;
}

void write_csv(const std::string& path, const ModelSpec& spec, const ModelData& data) {
  std::ofstream out(path);
  if (!out) throw DomainError(describe("cannot open '", path, "' for writing"));
  const std::vector<std::string> names = canonical_feature_names(spec);
  for (const auto& name : names) out << name << ',';
  out << "choice_a,choice_b\n";
  char buf[64];
  for (Eigen::Index r = 0; r < data.size(); ++r) {
    for (Eigen::Index c = 0; c < data.xa.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.xa(r, c));
      out << buf << ',';
    }
    for (Eigen::Index c = 0; c < data.xb.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.xb(r, c));
      out << buf << ',';
    }
    out << data.ya[r] << ',' << data.yb[r] << '\n';
  }
  if (!out) throw DomainError(describe("failed writing '", path, "'"));
}

}  // namespace copjoint
