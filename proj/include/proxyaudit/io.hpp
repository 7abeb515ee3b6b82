#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "proxyaudit/audit.hpp"
#include "proxyaudit/categories.hpp"
#include "proxyaudit/errors.hpp"
#include "proxyaudit/misclass.hpp"
#include "proxyaudit/proxy.hpp"
#include "proxyaudit/synth.hpp"

namespace proxyaudit::io {

// 17 significant digits round-trip IEEE doubles exactly.
inline std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

inline double parse_double(std::string_view s, const std::string& file,
                           std::size_t line) {
  std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size() || tmp.empty())
    throw ParseError(file, line, "not a number: '" + tmp + "'");
  return v;
}

inline std::int64_t parse_int(std::string_view s, const std::string& file,
                              std::size_t line) {
  std::string tmp(s);
  char* end = nullptr;
  const long long v = std::strtoll(tmp.c_str(), &end, 10);
  if (end != tmp.c_str() + tmp.size() || tmp.empty())
    throw ParseError(file, line, "not an integer: '" + tmp + "'");
  return v;
}

inline void split_line(const std::string& line, std::vector<std::string_view>& out) {
  out.clear();
  const char* begin = line.data();
  const char* end = begin + line.size();
  const char* field = begin;
  for (const char* p = begin; p != end; ++p) {
    if (*p == ',') {
      out.emplace_back(field, p - field);
      field = p + 1;
    }
  }
  out.emplace_back(field, end - field);
}

// Streams a delimited file: the header callback first, then one callback per
// data row. Lines starting with '#' are comments. Carriage returns are
// stripped so CRLF files parse too.
inline void for_each_csv_row(
    const std::string& path,
    const std::function<void(const std::vector<std::string_view>&)>& on_header,
    const std::function<void(std::size_t, const std::vector<std::string_view>&)>&
        on_row) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::string line;
  std::vector<std::string_view> fields;
  std::size_t lineno = 0;
  bool have_header = false;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    split_line(line, fields);
    if (!have_header) {
      width = fields.size();
      on_header(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != width)
      throw ParseError(path, lineno,
                       "expected " + std::to_string(width) + " fields, got " +
                           std::to_string(fields.size()));
    on_row(lineno, fields);
  }
  if (!have_header) throw ParseError(path, lineno, "missing header row");
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name, const std::string& file) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw ValidationError(file + ": missing column '" + name + "'");
  }
};

inline Csv read_csv(const std::string& path) {
  Csv csv;
  for_each_csv_row(
      path,
      [&](const std::vector<std::string_view>& h) {
        for (auto f : h) csv.header.emplace_back(f);
      },
      [&](std::size_t, const std::vector<std::string_view>& fields) {
        std::vector<std::string> row;
        row.reserve(fields.size());
        for (auto f : fields) row.emplace_back(f);
        csv.rows.push_back(std::move(row));
      });
  return csv;
}

class CsvWriter {
public:
  CsvWriter(const std::string& path, const std::string& comment = "")
      : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw ValidationError("cannot open file for writing: " + path);
    if (!comment.empty()) out_ << "# " << comment << "\n";
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (fields[i].find_first_of(",\n\r#") != std::string::npos)
        throw ValidationError("field contains a delimiter: '" + fields[i] + "'");
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }

  ~CsvWriter() = default;

private:
  std::string path_;
  std::ofstream out_;
};

// --- label ordering ----------------------------------------------------------

// Every per-race file carries the label order in its header; a mismatch with
// the run's declared ordering is a hard error.
inline void check_label_suffixes(const std::vector<std::string_view>& fields,
                                 std::size_t offset, const CategorySet& races,
                                 const std::string& prefix,
                                 const std::string& suffix,
                                 const std::string& path) {
  if (fields.size() != offset + static_cast<std::size_t>(races.size()))
    throw ValidationError(path + ": expected " + std::to_string(races.size()) +
                          " label columns, got " +
                          std::to_string(fields.size() - offset));
  for (int r = 0; r < races.size(); ++r) {
    const std::string expect = prefix + races.label(r) + suffix;
    if (std::string(fields[offset + r]) != expect)
      throw ValidationError(path + ": column " + std::to_string(offset + r) +
                            " is '" + std::string(fields[offset + r]) +
                            "', expected '" + expect +
                            "' (label ordering mismatch)");
  }
}

// --- proxy tables --------------------------------------------------------------

inline void write_surname_table(const std::string& path, const CategorySet& races,
                                const SurnameTable& table) {
  CsvWriter w(path);
  std::vector<std::string> row{"surname"};
  for (const auto& l : races.labels()) row.push_back("p_" + l);
  w.row(row);
  std::vector<std::string> keys;
  for (const auto& [k, v] : table.rows) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  for (const auto& k : keys) {
    row.assign({k});
    for (double v : *table.lookup(k)) row.push_back(fmt_g17(v));
    w.row(row);
  }
}

inline SurnameTable read_surname_table(const std::string& path,
                                       const CategorySet& races,
                                       double smoothing = 0.0) {
  SurnameTable table;
  table.categories = races.size();
  for_each_csv_row(
      path,
      [&](const std::vector<std::string_view>& h) {
        if (h.empty() || std::string(h[0]) != "surname")
          throw ValidationError(path + ": first column must be 'surname'");
        check_label_suffixes(h, 1, races, "p_", "", path);
      },
      [&](std::size_t lineno, const std::vector<std::string_view>& f) {
        Vector probs(races.size());
        for (int r = 0; r < races.size(); ++r)
          probs[r] = parse_double(f[1 + r], path, lineno) + smoothing;
        const double sum = stable_sum(probs);
        if (sum <= 0.0)
          throw ParseError(path, lineno, "surname row has zero mass");
        for (double& v : probs) v /= sum;
        table.insert(std::string(f[0]), std::move(probs));
      });
  return table;
}

inline void write_first_table(const std::string& path, const CategorySet& races,
                              const FirstNameTable& table) {
  CsvWriter w(path);
  std::vector<std::string> row{"first"};
  for (const auto& l : races.labels()) row.push_back("l_" + l);
  w.row(row);
  std::vector<std::string> keys;
  for (const auto& [k, v] : table.rows) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  for (const auto& k : keys) {
    row.assign({k});
    for (double v : *table.lookup(k)) row.push_back(fmt_g17(v));
    w.row(row);
  }
}

inline FirstNameTable read_first_table(const std::string& path,
                                       const CategorySet& races,
                                       double smoothing = 0.0) {
  FirstNameTable table;
  table.categories = races.size();
  for_each_csv_row(
      path,
      [&](const std::vector<std::string_view>& h) {
        if (h.empty() || std::string(h[0]) != "first")
          throw ValidationError(path + ": first column must be 'first'");
        check_label_suffixes(h, 1, races, "l_", "", path);
      },
      [&](std::size_t lineno, const std::vector<std::string_view>& f) {
        Vector lik(races.size());
        for (int r = 0; r < races.size(); ++r)
          lik[r] = parse_double(f[1 + r], path, lineno) + smoothing;
        table.insert(std::string(f[0]), std::move(lik));
      });
  return table;
}

inline void write_geo_table(const std::string& path, const CategorySet& races,
                            const GeoTable& table) {
  CsvWriter w(path);
  std::vector<std::string> row{"region"};
  for (const auto& l : races.labels()) row.push_back(l + "_count");
  w.row(row);
  std::vector<std::string> keys;
  for (const auto& [k, v] : table.counts) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  for (const auto& k : keys) {
    row.assign({k});
    for (double v : table.counts.at(k)) row.push_back(fmt_g17(v));
    w.row(row);
  }
}

inline GeoTable read_geo_table(const std::string& path, const CategorySet& races,
                               double smoothing = 0.0) {
  GeoTable table;
  for_each_csv_row(
      path,
      [&](const std::vector<std::string_view>& h) {
        if (h.empty() || std::string(h[0]) != "region")
          throw ValidationError(path + ": first column must be 'region'");
        check_label_suffixes(h, 1, races, "", "_count", path);
      },
      [&](std::size_t lineno, const std::vector<std::string_view>& f) {
        Vector counts(races.size());
        for (int r = 0; r < races.size(); ++r)
          counts[r] = parse_double(f[1 + r], path, lineno) + smoothing;
        table.insert(std::string(f[0]), std::move(counts));
      });
  return table;
}

// --- flows and confusion matrices ---------------------------------------------

inline void write_flows(const std::string& path, const CategorySet& races,
                        const FlowCounts& flows, const std::string& comment = "") {
  CsvWriter w(path, comment);
  std::vector<std::string> row{"prediction"};
  for (const auto& l : races.labels()) row.push_back(l);
  w.row(row);
  for (int j = 0; j < flows.categories; ++j) {
    row.assign({races.label(j)});
    for (int k = 0; k < flows.categories; ++k)
      row.push_back(std::to_string(flows.flow[j][k]));
    w.row(row);
  }
}

inline FlowCounts read_flows(const std::string& path, const CategorySet& races) {
  std::vector<std::vector<std::int64_t>> cells;
  int next_row = 0;
  for_each_csv_row(
      path,
      [&](const std::vector<std::string_view>& h) {
        if (h.empty() || std::string(h[0]) != "prediction")
          throw ValidationError(path + ": first column must be 'prediction'");
        check_label_suffixes(h, 1, races, "", "", path);
      },
      [&](std::size_t lineno, const std::vector<std::string_view>& f) {
        if (next_row >= races.size())
          throw ParseError(path, lineno, "more rows than categories");
        if (std::string(f[0]) != races.label(next_row))
          throw ParseError(path, lineno,
                           "row label '" + std::string(f[0]) + "', expected '" +
                               races.label(next_row) + "'");
        std::vector<std::int64_t> row(races.size());
        for (int k = 0; k < races.size(); ++k)
          row[k] = parse_int(f[1 + k], path, lineno);
        cells.push_back(std::move(row));
        ++next_row;
      });
  if (next_row != races.size())
    throw ValidationError(path + ": expected " + std::to_string(races.size()) +
                          " rows, got " + std::to_string(next_row));
  return flows_from_counts(std::move(cells));
}

inline void write_confusion(const std::string& path, const CategorySet& races,
                            const ConfusionMatrix& c,
                            const std::string& comment = "") {
  CsvWriter w(path, comment);
  std::vector<std::string> row{"prediction"};
  for (const auto& l : races.labels()) row.push_back(l);
  w.row(row);
  for (int j = 0; j < c.categories(); ++j) {
    row.assign({races.label(j)});
    for (int k = 0; k < c.categories(); ++k) row.push_back(fmt_g17(c(j, k)));
    w.row(row);
  }
}

inline ConfusionMatrix read_confusion(const std::string& path,
                                      const CategorySet& races) {
  Matrix m(races.size(), races.size());
  int next_row = 0;
  for_each_csv_row(
      path,
      [&](const std::vector<std::string_view>& h) {
        if (h.empty() || std::string(h[0]) != "prediction")
          throw ValidationError(path + ": first column must be 'prediction'");
        check_label_suffixes(h, 1, races, "", "", path);
      },
      [&](std::size_t lineno, const std::vector<std::string_view>& f) {
        if (next_row >= races.size())
          throw ParseError(path, lineno, "more rows than categories");
        if (std::string(f[0]) != races.label(next_row))
          throw ParseError(path, lineno, "unexpected row label");
        for (int k = 0; k < races.size(); ++k)
          m(next_row, k) = parse_double(f[1 + k], path, lineno);
        ++next_row;
      });
  if (next_row != races.size())
    throw ValidationError(path + ": expected " + std::to_string(races.size()) +
                          " rows");
  return ConfusionMatrix(std::move(m));
}

// --- label/value files ----------------------------------------------------------

inline void write_label_values(const std::string& path, const CategorySet& races,
                               const std::string& value_name, const Vector& values,
                               const std::string& comment = "") {
  if (static_cast<int>(values.size()) != races.size())
    throw DimensionMismatch("value vector length does not match label count");
  CsvWriter w(path, comment);
  w.row({"label", value_name});
  for (int r = 0; r < races.size(); ++r)
    w.row({races.label(r), fmt_g17(values[r])});
}

inline Vector read_label_values(const std::string& path, const CategorySet& races,
                                const std::string& value_name) {
  Vector values(races.size());
  std::vector<bool> seen(races.size(), false);
  for_each_csv_row(
      path,
      [&](const std::vector<std::string_view>& h) {
        if (h.size() != 2 || std::string(h[0]) != "label" ||
            std::string(h[1]) != value_name)
          throw ValidationError(path + ": expected header 'label," + value_name +
                                "'");
      },
      [&](std::size_t lineno, const std::vector<std::string_view>& f) {
        const int r = races.index_of(std::string(f[0]));
        if (r < 0)
          throw ParseError(path, lineno, "unknown label '" + std::string(f[0]) + "'");
        if (seen[r]) throw ParseError(path, lineno, "duplicate label");
        seen[r] = true;
        values[r] = parse_double(f[1], path, lineno);
      });
  for (int r = 0; r < races.size(); ++r)
    if (!seen[r])
      throw ValidationError(path + ": missing label '" + races.label(r) + "'");
  return values;
}

// --- population microdata --------------------------------------------------------

inline void write_population(const std::string& path, const CategorySet& races,
                             const std::vector<PopulationRecord>& records) {
  CsvWriter w(path);
  w.row({"id", "region", "surname", "first", "race_code", "gender_code",
         "age_range", "average_premium", "MEDFAMINC", "PPOV", "PUNEMP"});
  const auto& bands = age_band_labels();
  for (const auto& rec : records) {
    w.row({std::to_string(rec.id), rec.region_key, rec.surname_key, rec.first_key,
           races.label(rec.true_race), rec.gender == 1 ? "M" : "F",
           bands.at(rec.age_band), fmt_g17(rec.premium), fmt_g17(rec.ses.medfaminc),
           fmt_g17(rec.ses.ppov), fmt_g17(rec.ses.punemp)});
  }
}

struct MicrodataColumns {
  int id = -1, region = -1, surname = -1, first = -1, race = -1, gender = -1;
  int age = -1, premium = -1, medfaminc = -1, ppov = -1, punemp = -1;
};

inline std::vector<PopulationRecord> read_population(const std::string& path,
                                                     const CategorySet& races) {
  std::vector<PopulationRecord> records;
  MicrodataColumns col;
  const auto& bands = age_band_labels();
  for_each_csv_row(
      path,
      [&](const std::vector<std::string_view>& h) {
        for (std::size_t i = 0; i < h.size(); ++i) {
          const std::string name(h[i]);
          const int idx = static_cast<int>(i);
          if (name == "id") col.id = idx;
          else if (name == "region" || name == "zip_code") col.region = idx;
          else if (name == "surname") col.surname = idx;
          else if (name == "first") col.first = idx;
          else if (name == "race_code") col.race = idx;
          else if (name == "gender_code") col.gender = idx;
          else if (name == "age_range") col.age = idx;
          else if (name == "average_premium") col.premium = idx;
          else if (name == "MEDFAMINC") col.medfaminc = idx;
          else if (name == "PPOV") col.ppov = idx;
          else if (name == "PUNEMP") col.punemp = idx;
        }
        if (col.region < 0)
          throw ValidationError(path + ": missing 'region' (or 'zip_code') column");
      },
      [&](std::size_t lineno, const std::vector<std::string_view>& f) {
        PopulationRecord rec;
        rec.id = col.id >= 0 ? parse_int(f[col.id], path, lineno)
                             : static_cast<std::int64_t>(records.size());
        rec.region_key = std::string(f[col.region]);
        if (col.surname >= 0) rec.surname_key = std::string(f[col.surname]);
        if (col.first >= 0) rec.first_key = std::string(f[col.first]);
        if (col.race >= 0) {
          const int r = races.index_of(std::string(f[col.race]));
          if (r < 0)
            throw ParseError(path, lineno,
                             "unknown race_code '" + std::string(f[col.race]) + "'");
          rec.true_race = r;
        }
        if (col.gender >= 0) {
          const std::string g(f[col.gender]);
          if (g != "F" && g != "M")
            throw ParseError(path, lineno, "gender_code must be F or M");
          rec.gender = g == "M" ? 1 : 0;
        }
        if (col.age >= 0) {
          const std::string a(f[col.age]);
          const auto it = std::find(bands.begin(), bands.end(), a);
          if (it == bands.end())
            throw ParseError(path, lineno, "unknown age_range '" + a + "'");
          rec.age_band = static_cast<int>(it - bands.begin());
        }
        if (col.premium >= 0)
          rec.premium = parse_double(f[col.premium], path, lineno);
        if (col.medfaminc >= 0)
          rec.ses.medfaminc = parse_double(f[col.medfaminc], path, lineno);
        if (col.ppov >= 0) rec.ses.ppov = parse_double(f[col.ppov], path, lineno);
        if (col.punemp >= 0)
          rec.ses.punemp = parse_double(f[col.punemp], path, lineno);
        records.push_back(std::move(rec));
      });
  return records;
}

// --- report files ----------------------------------------------------------------

inline void write_posteriors(const std::string& path, const CategorySet& races,
                             const std::vector<std::int64_t>& ids,
                             const std::vector<ProxyPosterior>& posteriors,
                             const std::string& comment = "") {
  if (ids.size() != posteriors.size())
    throw LengthMismatch(ids.size(), posteriors.size());
  CsvWriter w(path, comment);
  std::vector<std::string> row{"id"};
  for (const auto& l : races.labels()) row.push_back("p_" + l);
  row.push_back("mode");
  row.push_back("argmax");
  row.push_back("tie_broken");
  w.row(row);
  for (std::size_t i = 0; i < posteriors.size(); ++i) {
    const auto& post = posteriors[i];
    row.assign({std::to_string(ids[i])});
    for (double v : post.probs) row.push_back(fmt_g17(v));
    row.push_back(to_string(post.mode));
    row.push_back(races.label(post.argmax));
    row.push_back(post.tie_broken ? "1" : "0");
    w.row(row);
  }
}

inline void write_precision(const std::string& path, const CategorySet& races,
                            const FlowCounts& flows,
                            const std::string& comment = "") {
  const Vector precision = precision_per_predicted_class(flows);
  CsvWriter w(path, comment);
  w.row({"prediction", "correct", "predicted_total", "accuracy_pct", "precision"});
  for (int j = 0; j < flows.categories; ++j)
    w.row({races.label(j), std::to_string(flows.flow[j][j]),
           std::to_string(flows.pred_counts[j]),
           fmt_fixed(100.0 * precision[j], 1), fmt_g17(precision[j])});
}

// Table-1-style aligned text: prediction rows, reference columns, row sums,
// per-row accuracy to one decimal, and the column-sum footer.
inline std::string render_confusion_table(const CategorySet& races,
                                          const FlowCounts& flows) {
  const Vector precision = precision_per_predicted_class(flows);
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> head{"Prediction"};
  for (const auto& l : races.labels()) head.push_back(l);
  head.push_back("Row Sum");
  head.push_back("Accuracy (%)");
  grid.push_back(head);
  for (int j = 0; j < flows.categories; ++j) {
    std::vector<std::string> row{races.label(j)};
    for (int k = 0; k < flows.categories; ++k)
      row.push_back(std::to_string(flows.flow[j][k]));
    row.push_back(std::to_string(flows.pred_counts[j]));
    row.push_back(fmt_fixed(100.0 * precision[j], 1));
    grid.push_back(row);
  }
  std::vector<std::string> foot{"Column Sum"};
  for (int k = 0; k < flows.categories; ++k)
    foot.push_back(std::to_string(flows.true_counts[k]));
  foot.push_back(std::to_string(flows.total()));
  foot.push_back("");
  grid.push_back(foot);

  std::vector<std::size_t> widths(head.size(), 0);
  for (const auto& row : grid)
    for (std::size_t c = 0; c < row.size(); ++c)
      widths[c] = std::max(widths[c], row[c].size());
  std::ostringstream os;
  for (const auto& row : grid) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) os << "  ";
      os << std::string(widths[c] - row[c].size(), ' ') << row[c];
    }
    os << "\n";
  }
  return os.str();
}

inline void write_exp1_csv(const std::string& path, const CategorySet& races,
                           const Exp1Report& rep, const std::string& comment = "") {
  CsvWriter w(path, comment);
  w.row({"model", "controls", "category", "coefficient",
         "disparity_vs_" + races.label(rep.reference)});
  auto raw_rows = [&](const char* model, const Vector& coef) {
    for (int r = 0; r < races.size(); ++r)
      w.row({model, "none", races.label(r), fmt_g17(coef[r]),
             fmt_g17(rep.raw_disparity(coef, r))});
  };
  raw_rows("reported", rep.reported);
  raw_rows("mixing", rep.mixing);
  raw_rows("proxy", rep.proxy);
  for (const auto& pair : rep.adjusted) {
    auto adj_rows = [&](const char* model, const AdjustedDisparities& adj) {
      w.row({model, to_string(pair.controls), "(intercept)",
             fmt_g17(adj.intercept), ""});
      for (const auto& [race, coef] : adj.disparity)
        w.row({model, to_string(pair.controls), races.label(race), fmt_g17(coef),
               fmt_g17(coef)});
    };
    adj_rows("reported_adjusted", pair.reported);
    adj_rows("proxy_adjusted", pair.proxy);
  }
}

inline void write_zip_cells_csv(const std::string& path, const CategorySet& races,
                                const std::vector<ZipRaceCell>& cells,
                                const std::string& comment = "") {
  CsvWriter w(path, comment);
  w.row({"region", "race", "n_true", "n_pred", "deviation", "displacement",
         "residual_sum"});
  for (const auto& cell : cells)
    w.row({cell.region, races.label(cell.race), fmt_g17(cell.n_true),
           fmt_g17(cell.n_pred), fmt_g17(cell.deviation),
           fmt_g17(cell.displacement), fmt_g17(cell.residual_sum)});
}

inline void write_exp2_csv(const std::string& path, const CategorySet& races,
                           const Exp2Report& rep, const std::string& comment = "") {
  CsvWriter w(path, comment);
  w.row({"race", "regression", "controls", "term", "value"});
  const std::vector<std::string> ses_names{"MEDFAMINC", "PPOV", "PUNEMP"};
  for (const auto& panel : rep.panels) {
    const std::string race = races.label(panel.race);
    auto dev_rows = [&](const Exp2DeviationFit& fit, const char* controls) {
      w.row({race, "deviation", controls, "alpha0", fmt_g17(fit.alpha0)});
      w.row({race, "deviation", controls, "alpha1", fmt_g17(fit.alpha1)});
      for (std::size_t i = 0; i < fit.ses_coefficients.size(); ++i)
        w.row({race, "deviation", controls, ses_names[i],
               fmt_g17(fit.ses_coefficients[i])});
      w.row({race, "deviation", controls, "residual_se", fmt_g17(fit.residual_se)});
    };
    auto res_rows = [&](const Exp2ResidualFit& fit, const char* controls) {
      w.row({race, "residual", controls, "gamma_d", fmt_g17(fit.gamma_d)});
      w.row({race, "residual", controls, "gamma_e", fmt_g17(fit.gamma_e)});
      for (std::size_t i = 0; i < fit.ses_coefficients.size(); ++i)
        w.row({race, "residual", controls, ses_names[i],
               fmt_g17(fit.ses_coefficients[i])});
      w.row({race, "residual", controls, "residual_se", fmt_g17(fit.residual_se)});
    };
    dev_rows(panel.deviation_baseline, "baseline");
    if (panel.residual_baseline) res_rows(*panel.residual_baseline, "baseline");
    if (panel.deviation_ses) dev_rows(*panel.deviation_ses, "ses");
    if (panel.residual_ses) res_rows(*panel.residual_ses, "ses");
  }
}

inline void write_shrinkage_csv(const std::string& path, const ShrinkageReport& rep,
                                const std::string& comment = "") {
  CsvWriter w(path, comment);
  w.row({"metric", "value"});
  w.row({"ss_true", fmt_g17(rep.ss_true)});
  w.row({"ss_proxy", fmt_g17(rep.ss_proxy)});
  w.row({"neutral", rep.neutral ? "1" : "0"});
  w.row({"reversible", rep.reversible ? "1" : "0"});
  if (rep.eigenvalues)
    for (std::size_t i = 0; i < rep.eigenvalues->size(); ++i)
      w.row({"eigenvalue_" + std::to_string(i), fmt_g17((*rep.eigenvalues)[i])});
}

inline void write_mc_csv(const std::string& path, const CategorySet& races,
                         const McReport& mc, const Vector& roe,
                         const Vector& expected_n, const Vector& expected_mass,
                         const std::string& comment = "") {
  CsvWriter w(path, comment);
  w.row({"class", "mean_beta", "se_mean_beta", "roe_beta", "mean_n", "se_mean_n",
         "expected_n", "mean_mass", "se_mean_mass", "expected_mass"});
  for (int j = 0; j < races.size(); ++j)
    w.row({races.label(j), fmt_g17(mc.mean_beta[j]), fmt_g17(mc.se_mean_beta[j]),
           fmt_g17(roe[j]), fmt_g17(mc.mean_pred_counts[j]),
           fmt_g17(mc.se_mean_pred_counts[j]), fmt_g17(expected_n[j]),
           fmt_g17(mc.mean_signal_mass[j]), fmt_g17(mc.se_mean_signal_mass[j]),
           fmt_g17(expected_mass[j])});
  w.row({"replicates_used", std::to_string(mc.replicates_used), "", "", "", "", "",
         "", "", ""});
  w.row({"replicates_skipped", std::to_string(mc.replicates_skipped), "", "", "",
         "", "", "", "", ""});
}

// Aligned text table with a fixed per-column decimal count.
inline std::string render_named_table(
    const std::vector<std::string>& header,
    const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c)
    widths[c] = header[c].size();
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c)
      widths[c] = std::max(widths[c], row[c].size());
  std::ostringstream os;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) os << "  ";
      os << std::string(widths[c] - row[c].size(), ' ') << row[c];
    }
    os << "\n";
  };
  emit(header);
  for (const auto& row : rows) emit(row);
  return os.str();
}

}  // namespace proxyaudit::io
