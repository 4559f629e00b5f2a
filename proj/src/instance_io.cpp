#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

#include <json.hpp>

#include "dan/errors.hpp"
#include "dan/instance.hpp"

namespace dan {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  return s;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

MtspInstance parse_tsplib(std::istream& in, int m) {
  std::string name;
  long dimension = -1;
  std::size_t dimension_line = 0;
  bool in_coords = false;
  std::size_t coord_section_line = 0;
  std::vector<Point> coords;
  std::vector<bool> filled;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (upper(line) == "EOF") break;

    if (in_coords) {
      std::istringstream fields(line);
      long index = 0;
      double x = 0.0, y = 0.0;
      if (!(fields >> index >> x >> y)) {
        throw ParseError(line_no, "NODE_COORD_SECTION: expected \"index x y\", got \"" + line + "\"");
      }
      if (index < 1 || index > dimension) {
        throw ParseError(line_no, "NODE_COORD_SECTION: node index " + std::to_string(index) +
                                      " outside 1.." + std::to_string(dimension));
      }
      if (filled[index - 1]) {
        throw ParseError(line_no, "NODE_COORD_SECTION: node " + std::to_string(index) + " listed twice");
      }
      coords[index - 1] = {x, y};
      filled[index - 1] = true;
      continue;
    }

    std::string key = line;
    std::string value;
    if (const auto colon = line.find(':'); colon != std::string::npos) {
      key = trim(line.substr(0, colon));
      value = trim(line.substr(colon + 1));
    } else if (const auto space = line.find_first_of(" \t"); space != std::string::npos) {
      key = trim(line.substr(0, space));
      value = trim(line.substr(space + 1));
    }
    key = upper(key);

    if (key == "NAME") {
      name = value;
    } else if (key == "DIMENSION") {
      try {
        std::size_t used = 0;
        dimension = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw ParseError(line_no, "DIMENSION: not an integer: \"" + value + "\"");
      }
      if (dimension < 2) throw ParseError(line_no, "DIMENSION: need at least 2 nodes");
      dimension_line = line_no;
    } else if (key == "EDGE_WEIGHT_TYPE") {
      if (upper(value) != "EUC_2D") {
        throw UnsupportedFormat("EDGE_WEIGHT_TYPE " + value + " is not supported (only EUC_2D)");
      }
    } else if (key == "NODE_COORD_SECTION") {
      if (dimension < 0) throw ParseError(line_no, "NODE_COORD_SECTION before DIMENSION");
      in_coords = true;
      coord_section_line = line_no;
      coords.assign(dimension, Point{});
      filled.assign(dimension, false);
    } else if (key == "EDGE_WEIGHT_SECTION" || key == "DISPLAY_DATA_SECTION" ||
               key == "FIXED_EDGES_SECTION") {
      throw UnsupportedFormat(key + " is not supported");
    }
    // TYPE, COMMENT and other header keys carry no geometry.
  }

  if (dimension < 0) throw ParseError(line_no, "missing DIMENSION");
  if (!in_coords) throw ParseError(line_no, "missing NODE_COORD_SECTION");
  const auto count = std::count(filled.begin(), filled.end(), true);
  if (count != dimension) {
    throw ParseError(line_no, "NODE_COORD_SECTION (started at line " + std::to_string(coord_section_line) +
                                  ") has " + std::to_string(count) + " of " + std::to_string(dimension) +
                                  " nodes declared at line " + std::to_string(dimension_line));
  }
  return normalize(coords, m, name);
}

MtspInstance load_tsplib(const std::string& path, int m) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  return parse_tsplib(in, m);
}

std::string instance_to_json(const MtspInstance& inst) {
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::string out = "{\n  \"name\": " + nlohmann::json(inst.name).dump() + ",\n";
  out += "  \"n\": " + std::to_string(inst.n()) + ",\n";
  out += "  \"m\": " + std::to_string(inst.m) + ",\n";
  out += "  \"scale\": " + num(inst.scale) + ",\n";
  out += "  \"coords\": [";
  for (int i = 0; i < inst.n(); ++i) {
    out += i == 0 ? "\n    " : ",\n    ";
    out += "[" + num(inst.coords[i].x) + ", " + num(inst.coords[i].y) + "]";
  }
  out += "\n  ]\n}\n";
  return out;
}

MtspInstance instance_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, std::string("instance JSON: ") + e.what());
  }
  try {
    MtspInstance inst;
    inst.name = doc.value("name", std::string{});
    inst.m = doc.at("m").get<int>();
    inst.scale = doc.value("scale", 1.0);
    for (const auto& xy : doc.at("coords")) inst.coords.push_back({xy.at(0).get<double>(), xy.at(1).get<double>()});
    if (doc.contains("n") && doc["n"].get<int>() != inst.n()) {
      throw InvalidArgument("instance JSON: n does not match coords length");
    }
    if (inst.n() < 2 || inst.m < 1 || !(inst.scale > 0.0)) {
      throw InvalidArgument("instance JSON: need n >= 2, m >= 1, scale > 0");
    }
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("instance JSON: ") + e.what());
  }
}

void write_instance(const std::string& path, const MtspInstance& inst) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << instance_to_json(inst);
  if (!out) throw InvalidArgument("write failed: " + path);
}

MtspInstance read_instance(const std::string& path, int m_override) {
  if (ends_with(upper(path), ".TSP")) {
    if (m_override < 1) throw InvalidArgument("TSPLIB input needs an agent count (--m)");
    return load_tsplib(path, m_override);
  }
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  MtspInstance inst = instance_from_json(buf.str());
  if (m_override > 0) inst.m = m_override;
  return inst;
}

}  // namespace dan
