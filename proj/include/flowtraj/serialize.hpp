#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "flowtraj/cell_grid.hpp"
#include "flowtraj/linking.hpp"
#include "flowtraj/segmentation.hpp"

namespace flowtraj {

std::string tracks_to_json(std::span<const Track> tracks);
std::vector<Track> tracks_from_json(const std::string& text);

std::string streamlines_to_json(std::span<const Streamline> lines);

/// Accepts either an array of point arrays or an array of objects carrying
/// a "points" member (the trajectory dump format).
std::vector<Polyline> polylines_from_json(const std::string& text);
std::string polylines_to_json(std::span<const Polyline> lines);

/// Boxes as [x0, y0, x1, y1] arrays or {"x0", "y0", "x1", "y1"} objects.
std::vector<Box> boxes_from_json(const std::string& text);
std::string boxes_to_json(std::span<const Box> boxes);

std::string cells_to_json(const CellGrid& grid, const EntropyMap& entropy);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

std::vector<Polyline> track_polylines(std::span<const Track> tracks);

}  // namespace flowtraj
