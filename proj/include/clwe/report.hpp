#pragma once

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "clwe/ablation.hpp"
#include "clwe/bli.hpp"
#include "clwe/eigsim.hpp"

namespace clwe {

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Left-aligned plain-text table with a rule under the header.
inline std::string text_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    w[c] = header[c].size();
    for (const auto& r : rows) w[c] = std::max(w[c], r[c].size());
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      out << cells[c];
      if (c + 1 < cells.size()) out << std::string(w[c] - cells[c].size() + 2, ' ');
    }
    out << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (auto x : w) total += x + 2;
  out << std::string(total - 2, '-') << '\n';
  for (const auto& r : rows) line(r);
  return out.str();
}

inline void write_text(const std::string& text, const std::string& path) {
  auto out = open_out(path);
  out << text;
  if (!out) throw DataError(path + ": write failed");
}

}  // namespace detail

// BLI --------------------------------------------------------------------

inline std::string bli_csv(const BliReport& r) {
  return "p_at_1,p_at_5,p_at_10,evaluated,skipped_oov,retrieval,csls_k\n" + detail::fmt("%.6f", r.p_at_1) + "," +
         detail::fmt("%.6f", r.p_at_5) + "," + detail::fmt("%.6f", r.p_at_10) + "," + std::to_string(r.evaluated) +
         "," + std::to_string(r.skipped_oov) + "," + to_string(r.retrieval) + "," + std::to_string(r.csls_k) + "\n";
}

inline std::string bli_table(const BliReport& r) {
  return detail::text_table({"P@1", "P@5", "P@10", "evaluated", "skipped_oov", "retrieval"},
                            {{detail::fmt("%.4f", r.p_at_1), detail::fmt("%.4f", r.p_at_5),
                              detail::fmt("%.4f", r.p_at_10), std::to_string(r.evaluated),
                              std::to_string(r.skipped_oov), to_string(r.retrieval)}});
}

// Eigenvalue similarity --------------------------------------------------

inline std::string eigsim_csv(const EigsimReport& r) {
  return "delta,n_words,knn_k,k_x,k_y,k_effective\n" + detail::fmt("%.9g", r.delta) + "," +
         std::to_string(r.n_words) + "," + std::to_string(r.knn_k) + "," + std::to_string(r.k_x) + "," +
         std::to_string(r.k_y) + "," + std::to_string(r.k_effective) + "\n";
}

// Both spectra, largest first.
inline std::string spectra_csv(const EigsimReport& r) {
  std::string out = "rank,lambda_x,lambda_y\n";
  const auto n = std::max(r.spectrum_x.size(), r.spectrum_y.size());
  for (std::size_t i = 0; i < n; ++i) {
    out += std::to_string(i + 1) + ",";
    if (i < r.spectrum_x.size()) out += detail::fmt("%.9g", r.spectrum_x[r.spectrum_x.size() - 1 - i]);
    out += ",";
    if (i < r.spectrum_y.size()) out += detail::fmt("%.9g", r.spectrum_y[r.spectrum_y.size() - 1 - i]);
    out += "\n";
  }
  return out;
}

inline std::string eigsim_table(const EigsimReport& r) {
  return detail::text_table({"delta", "n_words", "knn_k", "k_x", "k_y", "k_effective"},
                            {{detail::fmt("%.6g", r.delta), std::to_string(r.n_words), std::to_string(r.knn_k),
                              std::to_string(r.k_x), std::to_string(r.k_y), std::to_string(r.k_effective)}});
}

// Ablation ---------------------------------------------------------------

inline std::string ablation_csv(const std::vector<SchemeReport>& rows) {
  std::string out = "run,scheme,p_at_1,p_at_5,p_at_10,evaluated,skipped_oov,retrieval,delta\n";
  for (const auto& r : rows)
    out += r.run + "," + r.scheme + "," + detail::fmt("%.6f", r.bli.p_at_1) + "," + detail::fmt("%.6f", r.bli.p_at_5) +
           "," + detail::fmt("%.6f", r.bli.p_at_10) + "," + std::to_string(r.bli.evaluated) + "," +
           std::to_string(r.bli.skipped_oov) + "," + to_string(r.bli.retrieval) + "," +
           (r.delta ? detail::fmt("%.9g", *r.delta) : std::string()) + "\n";
  return out;
}

inline std::string ablation_table(const std::vector<SchemeReport>& rows) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows)
    cells.push_back({r.run, r.scheme, detail::fmt("%.1f", 100.0 * r.bli.p_at_1), detail::fmt("%.1f", 100.0 * r.bli.p_at_5),
                     detail::fmt("%.1f", 100.0 * r.bli.p_at_10), r.delta ? detail::fmt("%.4g", *r.delta) : "-"});
  return detail::text_table({"run", "scheme", "P@1", "P@5", "P@10", "delta"}, cells);
}

// SVG --------------------------------------------------------------------

inline std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                                 const std::vector<double>& values, double y_max = 1.0) {
  const int w = 120 + 90 * static_cast<int>(labels.size()), h = 320, top = 40, bottom = 260, left = 60;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  s << "<text x=\"" << left << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << w - 20 << "\" y2=\"" << bottom
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
    << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double v = std::clamp(values[i] / y_max, 0.0, 1.0);
    const int bh = static_cast<int>(v * (bottom - top));
    const int x = left + 20 + 90 * static_cast<int>(i);
    s << "<rect x=\"" << x << "\" y=\"" << bottom - bh << "\" width=\"60\" height=\"" << bh
      << "\" fill=\"#4477aa\"/>\n";
    s << "<text x=\"" << x + 30 << "\" y=\"" << bottom - bh - 4
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << detail::fmt("%.3f", values[i])
      << "</text>\n";
    s << "<text x=\"" << x + 30 << "\" y=\"" << bottom + 16
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << labels[i] << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

// Descending spectra of both graphs as two polylines.
inline std::string spectra_svg(const EigsimReport& r) {
  const int w = 640, h = 360, left = 60, right = 620, top = 30, bottom = 320;
  double hi = 0.0;
  for (double v : r.spectrum_x) hi = std::max(hi, v);
  for (double v : r.spectrum_y) hi = std::max(hi, v);
  if (!(hi > 0.0)) hi = 1.0;
  auto poly = [&](const std::vector<double>& asc, const char* colour) {
    std::ostringstream p;
    p << "<polyline fill=\"none\" stroke=\"" << colour << "\" points=\"";
    const auto n = asc.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double x = left + (right - left) * (n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0);
      const double y = bottom - (bottom - top) * asc[n - 1 - i] / hi;
      p << detail::fmt("%.2f", x) << ',' << detail::fmt("%.2f", y) << ' ';
    }
    p << "\"/>\n";
    return p.str();
  };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  s << "<text x=\"" << left << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">Laplacian spectra, delta = "
    << detail::fmt("%.4g", r.delta) << "</text>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\"" << bottom
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
    << "\" stroke=\"black\"/>\n";
  s << poly(r.spectrum_x, "#4477aa") << poly(r.spectrum_y, "#cc6677");
  s << "<text x=\"" << right - 120 << "\" y=\"" << top + 10
    << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#4477aa\">source</text>\n";
  s << "<text x=\"" << right - 120 << "\" y=\"" << top + 26
    << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#cc6677\">target</text>\n";
  s << "</svg>\n";
  return s.str();
}

inline std::string ablation_svg(const std::vector<SchemeReport>& rows) {
  std::vector<std::string> labels;
  std::vector<double> values;
  for (const auto& r : rows) {
    labels.push_back(r.run.empty() ? r.scheme : r.run + ":" + r.scheme);
    values.push_back(r.bli.p_at_1);
  }
  return bar_chart_svg("P@1 by scheme", labels, values);
}

}  // namespace clwe
