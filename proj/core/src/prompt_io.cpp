#include "promptsim/prompt_io.hpp"

#include <sstream>

#include "json.hpp"

namespace promptsim {
namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json voxel_json(const Index3& v) { return ordered_json::array({v.i, v.j, v.k}); }

Index3 voxel_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("voxels", "each voxel must be [i,j,k]");
  return {j[0].get<std::int64_t>(), j[1].get<std::int64_t>(), j[2].get<std::int64_t>()};
}

ordered_json record(std::string_view kind, Polarity polarity) {
  ordered_json r;
  r["kind"] = kind;
  r["polarity"] = to_string(polarity);
  r["axis"] = nullptr;
  r["slice"] = nullptr;
  r["style"] = nullptr;
  r["voxels"] = ordered_json::array();
  return r;
}

}  // namespace

std::string serialize_prompt_set(const PromptSet& set) {
  std::string out;
  ordered_json header;
  header["kind"] = "header";
  header["iteration"] = set.iteration;
  header["version"] = 1;
  out += header.dump() + '\n';

  for (const auto& p : set.points) {
    auto r = record("point", p.polarity);
    r["voxels"].push_back(voxel_json(p.voxel));
    out += r.dump() + '\n';
  }
  if (set.box) {
    auto r = record("box", Polarity::Positive);
    r["voxels"].push_back(voxel_json(set.box->corner_min));
    r["voxels"].push_back(voxel_json(set.box->corner_max));
    out += r.dump() + '\n';
  }
  for (const auto& s : set.scribbles) {
    auto r = record("scribble", s.polarity);
    r["axis"] = to_string(s.slice_axis);
    r["slice"] = s.slice_index;
    r["style"] = to_string(s.style);
    for (const auto& v : s.voxels) r["voxels"].push_back(voxel_json(v));
    out += r.dump() + '\n';
  }
  return out;
}

PromptSet parse_prompt_set(std::string_view text) {
  PromptSet set;
  std::istringstream in{std::string(text)};
  std::string line;
  bool seen_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json r;
    try {
      r = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("line " + std::to_string(line_no), e.what());
    }
    try {
      const auto kind = r.at("kind").get<std::string>();
      if (kind == "header") {
        if (r.value("version", 0) != 1) throw ParseError("version", "unsupported prompt-set version");
        set.iteration = r.at("iteration").get<int>();
        seen_header = true;
        continue;
      }
      if (!seen_header) throw ParseError("header", "first record must be the header");
      const auto polarity = parse_polarity(r.at("polarity").get<std::string>());
      const auto& voxels = r.at("voxels");
      if (kind == "point") {
        if (voxels.size() != 1) throw ParseError("voxels", "a point has exactly one voxel");
        set.points.push_back({voxel_from_json(voxels[0]), polarity});
      } else if (kind == "box") {
        if (voxels.size() != 2) throw ParseError("voxels", "a box has exactly two corners");
        set.box = BoxPrompt{voxel_from_json(voxels[0]), voxel_from_json(voxels[1])};
      } else if (kind == "scribble") {
        Scribble s;
        s.polarity = polarity;
        s.slice_axis = parse_slice_axis(r.at("axis").get<std::string>());
        s.slice_index = r.at("slice").get<std::int64_t>();
        s.style = parse_scribble_style(r.at("style").get<std::string>());
        for (const auto& v : voxels) s.voxels.push_back(voxel_from_json(v));
        set.scribbles.push_back(std::move(s));
      } else {
        throw ParseError("kind", "unknown record kind '" + kind + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("line " + std::to_string(line_no), e.what());
    } catch (const InvalidArgument& e) {
      throw ParseError("line " + std::to_string(line_no), e.what());
    }
  }
  if (!seen_header) throw ParseError("header", "missing header record");
  return set;
}

}  // namespace promptsim
