#include "vesselkit/morphometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

namespace vesselkit {

namespace {

std::optional<double> angle_or_empty(const Vec3 &a, const Vec3 &b) {
  const double d = angle_deg(a, b);
  if (std::isnan(d)) return std::nullopt;
  return d;
}

std::size_t window_size(std::size_t n, int window) {
  return std::min(n, static_cast<std::size_t>(std::max(1, window)));
}

// Chord over the voxels ending at path[end].
Vec3 chord_ending(const std::vector<Voxel> &path, std::size_t end, const Spacing &s, int window) {
  const auto k = window_size(end + 1, window);
  return to_mm(path[end], s) - to_mm(path[end + 1 - k], s);
}

std::optional<double> ratio(double length, double radius) {
  if (radius > 0) return length / radius;
  return std::nullopt;
}

// CSV cells.

std::string number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string number(const std::optional<double> &v) { return v ? number(*v) : std::string(); }

template <typename T, typename F> std::string join(const std::vector<T> &xs, F &&fmt) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ';';
    out += fmt(xs[i]);
  }
  return out;
}

std::string quote(const std::string &s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::vector<std::string>> parse_rows(const std::string &text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false, any = false;
  auto end_row = [&] {
    row.push_back(std::move(cell));
    rows.push_back(std::move(row));
    row.clear();
    cell.clear();
    any = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c != '"') {
        cell += c;
      } else if (i + 1 < text.size() && text[i + 1] == '"') {
        cell += '"';
        ++i;
      } else {
        quoted = false;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(cell));
      cell.clear();
      any = true;
    } else if (c == '\n') {
      end_row();
    } else if (c != '\r') {
      cell += c;
      any = true;
    }
  }
  if (quoted) throw DataError("csv: unterminated quoted field");
  if (any || !row.empty()) end_row();
  return rows;
}

double parse_double(const std::string &s, const char *what) {
  double v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw DataError(std::string("csv: bad ") + what + " '" + s + "'");
  return v;
}

int parse_int(const std::string &s, const char *what) {
  int v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw DataError(std::string("csv: bad ") + what + " '" + s + "'");
  return v;
}

std::optional<double> parse_optional(const std::string &s, const char *what) {
  if (s.empty()) return std::nullopt;
  return parse_double(s, what);
}

std::vector<std::string> split_list(const std::string &s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const auto p = s.find(';', start);
    out.push_back(s.substr(start, p - start));
    if (p == std::string::npos) break;
    start = p + 1;
  }
  return out;
}

} // namespace

Vec3 initial_tangent(const std::vector<Voxel> &path, const Spacing &spacing, int window) {
  if (path.empty()) return {};
  const auto k = window_size(path.size(), window);
  return to_mm(path[k - 1], spacing) - to_mm(path.front(), spacing);
}

Vec3 terminal_tangent(const std::vector<Voxel> &path, const Spacing &spacing, int window) {
  if (path.empty()) return {};
  return chord_ending(path, path.size() - 1, spacing, window);
}

std::optional<double> emergence_angle(const Branch &parent, const Branch &child, const Spacing &spacing, int window) {
  if (parent.path.empty() || child.path.empty()) return std::nullopt;
  // Attachment point: the parent voxel nearest the child's first voxel, the
  // parent's last voxel when the child starts at the parent's end node.
  std::size_t at = parent.path.size() - 1;
  double best = voxel_distance(parent.path[at], child.path.front(), spacing);
  for (std::size_t i = parent.path.size(); i-- > 0;) {
    const double d = voxel_distance(parent.path[i], child.path.front(), spacing);
    if (d < best) {
      best = d;
      at = i;
    }
  }
  return angle_or_empty(chord_ending(parent.path, at, spacing, window), initial_tangent(child.path, spacing, window));
}

std::optional<double> end_angle(const Branch &branch, const Spacing &spacing, int window) {
  if (branch.path.size() < 2) return std::nullopt;
  const Vec3 chord = to_mm(branch.path.back(), spacing) - to_mm(branch.path.front(), spacing);
  return angle_or_empty(chord, terminal_tangent(branch.path, spacing, window));
}

PowerLaw power_law_index(double parent_radius, const std::vector<double> &children_radii) {
  if (children_radii.size() < 2) return {std::nullopt, "too_few_children"};
  if (!(parent_radius > 0) ||
      std::any_of(children_radii.begin(), children_radii.end(), [](double r) { return !(r > 0); }))
    return {std::nullopt, "zero_radius"};
  if (parent_radius <= *std::max_element(children_radii.begin(), children_radii.end())) return {std::nullopt, "no_root"};

  // g(n) = 1 - sum (r_c / r_p)^n rises monotonically from 1 - k at n = 0 to 1.
  auto g = [&](double n) {
    double s = 0;
    for (const double r : children_radii) s += std::pow(r / parent_radius, n);
    return 1.0 - s;
  };
  double lo = kPowerLawMin, hi = kPowerLawMax;
  if (g(lo) > 0 || g(hi) < 0) return {std::nullopt, "out_of_range"};
  for (int it = 0; it < 200 && hi - lo > 0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double v = g(mid);
    if (v == 0) return {mid, {}};
    (v < 0 ? lo : hi) = mid;
  }
  return {std::abs(g(lo)) <= std::abs(g(hi)) ? lo : hi, {}};
}

std::vector<BranchRecord> extract_table(const VesselGraph &tree, const std::vector<std::string> &names,
                                        const std::string &tree_label, const std::string &tree_id, int window) {
  if (!tree.oriented || !tree.root_branch()) throw DataError("morphometry: graph is not an oriented tree");
  if (tree_label != "portal" && tree_label != "hepatic")
    throw DataError("morphometry: tree label must be portal or hepatic, got '" + tree_label + "'");
  if (!names.empty() && names.size() != tree.branches.size())
    throw DataError("morphometry: " + std::to_string(names.size()) + " names for " +
                    std::to_string(tree.branches.size()) + " branches");

  const auto order = tree.preorder();
  std::vector<int> gen(tree.branches.size(), 0), n_desc(tree.branches.size(), 0);
  for (const int b : order) {
    const int p = tree.branch(b).parent;
    if (p >= 0) gen[static_cast<std::size_t>(b)] = gen[static_cast<std::size_t>(p)] + 1;
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    for (const int c : tree.branch(*it).children)
      n_desc[static_cast<std::size_t>(*it)] += 1 + n_desc[static_cast<std::size_t>(c)];

  std::vector<BranchRecord> rows;
  rows.reserve(order.size());
  for (const int id : order) {
    const auto &b = tree.branch(id);
    BranchRecord r;
    r.tree_id = tree_id;
    r.tree_label = tree_label;
    r.path_label = id;
    if (!names.empty()) r.path_name = names[static_cast<std::size_t>(id)];
    r.path_length = b.length_mm;
    r.path_radius = b.radius_mm;
    r.path_ratio = ratio(b.length_mm, b.radius_mm);
    for (const int c : b.children) {
      const auto &cb = tree.branch(c);
      r.children_id.push_back(c);
      r.children_length.push_back(cb.length_mm);
      r.children_radii.push_back(cb.radius_mm);
      r.children_ratio.push_back(ratio(cb.length_mm, cb.radius_mm));
    }
    if (b.parent >= 0) {
      r.emergence_angle = emergence_angle(tree.branch(b.parent), b, tree.spacing, window);
      if (!r.emergence_angle) r.flags.push_back("degenerate_emergence_tangent");
    }
    r.end_angle = end_angle(b, tree.spacing, window);
    if (!r.end_angle) r.flags.push_back("degenerate_end_tangent");
    if (!b.children.empty()) {
      const auto pl = power_law_index(b.radius_mm, r.children_radii);
      r.power_law_index = pl.index;
      if (!pl.flag.empty()) r.flags.push_back("power_law_" + pl.flag);
    }
    r.gen = gen[static_cast<std::size_t>(id)];
    r.n_desc = n_desc[static_cast<std::size_t>(id)];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<BranchRecord> extract_table(const AnatomicalLabeling &labeling, const std::string &tree_label,
                                        const std::string &tree_id, int window) {
  std::vector<std::string> names;
  names.reserve(labeling.branches.size());
  for (const auto &l : labeling.branches) names.push_back(l.path_name);
  return extract_table(labeling.graph, names, tree_label, tree_id, window);
}

std::string table_to_csv(const std::vector<BranchRecord> &records) {
  std::string out = kMorphometryHeader;
  out += '\n';
  auto num = [](double v) { return number(v); };
  auto opt = [](const std::optional<double> &v) { return number(v); };
  for (const auto &r : records) {
    const std::string cells[] = {
        quote(r.tree_id),
        quote(r.tree_label),
        std::to_string(r.path_label),
        quote(r.path_name),
        number(r.path_length),
        number(r.path_radius),
        number(r.path_ratio),
        join(r.children_id, [](int v) { return std::to_string(v); }),
        join(r.children_length, num),
        join(r.children_radii, num),
        join(r.children_ratio, opt),
        number(r.emergence_angle),
        number(r.end_angle),
        number(r.power_law_index),
        std::to_string(r.gen),
        std::to_string(r.n_desc),
    };
    for (std::size_t i = 0; i < std::size(cells); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  }
  return out;
}

std::vector<BranchRecord> table_from_csv(const std::string &csv) {
  const auto rows = parse_rows(csv);
  if (rows.empty()) throw DataError("csv: missing header");
  const auto expected = parse_rows(kMorphometryHeader)[0];
  if (rows[0] != expected) throw DataError("csv: unexpected header");

  std::vector<BranchRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto &c = rows[i];
    if (c.size() == 1 && c[0].empty()) continue;
    if (c.size() != expected.size())
      throw DataError("csv: row " + std::to_string(i) + " has " + std::to_string(c.size()) + " fields");
    BranchRecord r;
    r.tree_id = c[0];
    r.tree_label = c[1];
    r.path_label = parse_int(c[2], "path_label");
    r.path_name = c[3];
    r.path_length = parse_double(c[4], "path_length");
    r.path_radius = parse_double(c[5], "path_radius");
    r.path_ratio = parse_optional(c[6], "path_ratio");
    for (const auto &s : split_list(c[7])) r.children_id.push_back(parse_int(s, "children_id"));
    for (const auto &s : split_list(c[8])) r.children_length.push_back(parse_double(s, "children_length"));
    for (const auto &s : split_list(c[9])) r.children_radii.push_back(parse_double(s, "children_radii"));
    for (const auto &s : split_list(c[10])) r.children_ratio.push_back(parse_optional(s, "children_ratio"));
    // A single child with an empty ratio serializes as an empty cell.
    if (r.children_ratio.empty() && !r.children_id.empty()) r.children_ratio.resize(r.children_id.size());
    r.emergence_angle = parse_optional(c[11], "emergence_angle");
    r.end_angle = parse_optional(c[12], "end_angle");
    r.power_law_index = parse_optional(c[13], "Power_law_index");
    r.gen = parse_int(c[14], "gen");
    r.n_desc = parse_int(c[15], "n_desc");
    const auto n = r.children_id.size();
    if (r.children_length.size() != n || r.children_radii.size() != n || r.children_ratio.size() != n)
      throw DataError("csv: row " + std::to_string(i) + " has children lists of different lengths");
    out.push_back(std::move(r));
  }
  return out;
}

} // namespace vesselkit
