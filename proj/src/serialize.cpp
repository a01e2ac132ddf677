#include "flowtraj/serialize.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace flowtraj {

using nlohmann::json;

namespace {

json point_array(std::span<const Vec2> pts) {
  json a = json::array();
  for (const Vec2& p : pts) a.push_back({p.x, p.y});
  return a;
}

std::vector<Vec2> points_of(const json& a) {
  std::vector<Vec2> out;
  out.reserve(a.size());
  for (const auto& p : a) out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return out;
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

std::string tracks_to_json(std::span<const Track> tracks) {
  json out = json::array();
  for (const Track& t : tracks) {
    out.push_back({{"id", t.id},
                   {"window", {t.window_first, t.window_last}},
                   {"minibatch", {t.t_start, t.t_end}},
                   {"points", point_array(t.points)},
                   {"descriptors", t.S},
                   {"velocities", point_array(t.v)}});
  }
  return out.dump(1) + "\n";
}

std::vector<Track> tracks_from_json(const std::string& text) {
  std::vector<Track> out;
  try {
    for (const auto& j : parse(text)) {
      Track t;
      t.id = j.at("id").get<int>();
      t.window_first = j.at("window").at(0).get<int>();
      t.window_last = j.at("window").at(1).get<int>();
      t.t_start = j.at("minibatch").at(0).get<int>();
      t.t_end = j.at("minibatch").at(1).get<int>();
      t.points = points_of(j.at("points"));
      t.S = j.at("descriptors").get<std::vector<double>>();
      t.v = points_of(j.at("velocities"));
      if (t.S.size() != t.points.size() || t.v.size() != t.points.size()) {
        throw Error(ErrorCode::LengthMismatch, "track descriptors do not match its points");
      }
      out.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, std::string("bad track JSON: ") + e.what());
  }
  return out;
}

std::string streamlines_to_json(std::span<const Streamline> lines) {
  json out = json::array();
  for (const auto& s : lines) {
    out.push_back({{"seed", {s.seed.x, s.seed.y}},
                   {"termination", to_string(s.termination)},
                   {"start_termination", to_string(s.start_termination)},
                   {"points", point_array(s.points)}});
  }
  return out.dump(1) + "\n";
}

std::vector<Polyline> polylines_from_json(const std::string& text) {
  std::vector<Polyline> out;
  try {
    for (const auto& j : parse(text)) out.push_back(points_of(j.is_object() ? j.at("points") : j));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, std::string("bad trajectory JSON: ") + e.what());
  }
  return out;
}

std::string polylines_to_json(std::span<const Polyline> lines) {
  json out = json::array();
  for (const auto& l : lines) out.push_back(point_array(l));
  return out.dump(1) + "\n";
}

std::vector<Box> boxes_from_json(const std::string& text) {
  std::vector<Box> out;
  try {
    for (const auto& j : parse(text)) {
      if (j.is_array()) {
        out.push_back({j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()});
      } else {
        out.push_back({j.at("x0").get<int>(), j.at("y0").get<int>(), j.at("x1").get<int>(), j.at("y1").get<int>()});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, std::string("bad box JSON: ") + e.what());
  }
  return out;
}

std::string boxes_to_json(std::span<const Box> boxes) {
  json out = json::array();
  for (const auto& b : boxes) out.push_back({{"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1}});
  return out.dump(1) + "\n";
}

std::string cells_to_json(const CellGrid& grid, const EntropyMap& entropy) {
  json cells = json::array();
  for (const Cell& c : grid.cells()) {
    json groups = json::array();
    for (const auto& g : c.groups) {
      groups.push_back({{"x", g.x}, {"y", g.y}, {"n", g.n}, {"theta", g.theta}, {"mean_magnitude", g.mean_magnitude}});
    }
    cells.push_back({{"col", c.col},
                     {"row", c.row},
                     {"vectors", c.vectors.size()},
                     {"groups", groups},
                     {"entropy", entropy.at(c.col, c.row)}});
  }
  return json{{"cols", grid.cols()}, {"rows", grid.rows()}, {"cells", cells}}.dump(1) + "\n";
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

std::vector<Polyline> track_polylines(std::span<const Track> tracks) {
  std::vector<Polyline> out;
  out.reserve(tracks.size());
  for (const auto& t : tracks) out.push_back(t.points);
  return out;
}

}  // namespace flowtraj
