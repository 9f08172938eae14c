#pragma once

#include "vemns/mesh.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>
#include <string>

namespace vemns {

// Mesh file schema: {"vertices": [[x,y],...], "cells": [[i0,i1,...],...]},
// 0-based indices. nlohmann::json prints doubles shortest-round-trip, so
// write/read round-trips bit-exactly for finite values.

inline nlohmann::json mesh_to_json(const PolygonalMesh& mesh) {
  nlohmann::json j;
  j["vertices"] = nlohmann::json::array();
  for (const auto& v : mesh.vertices) j["vertices"].push_back({v.x(), v.y()});
  j["cells"] = mesh.cells;
  return j;
}

inline PolygonalMesh mesh_from_json(const nlohmann::json& j) {
  PolygonalMesh mesh;
  if (!j.contains("vertices") || !j.contains("cells"))
    throw std::runtime_error("mesh json: missing \"vertices\" or \"cells\"");
  for (const auto& v : j.at("vertices")) {
    if (!v.is_array() || v.size() != 2)
      throw std::runtime_error("mesh json: vertex is not a 2-array");
    mesh.vertices.emplace_back(v[0].get<double>(), v[1].get<double>());
  }
  for (const auto& c : j.at("cells")) mesh.cells.push_back(c.get<std::vector<int>>());
  finalize_mesh(mesh);
  return mesh;
}

inline void save_mesh(const PolygonalMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_mesh: cannot open " + path);
  out << mesh_to_json(mesh).dump(1) << "\n";
}

inline PolygonalMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_mesh: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_mesh: parse failure in " + path + ": " + e.what());
  }
  return mesh_from_json(j);
}

}  // namespace vemns
