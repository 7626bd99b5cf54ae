#pragma once

#include <optional>
#include <string>

#include "bookshelf/instgen.hpp"
#include "bookshelf/model.hpp"

namespace bookshelf {

struct SvgOptions {
  double pixels_per_unit = 40.0;
  double margin = 20.0;
};

/// Shelf outline and books as filled polygons colored by mode. With a
/// solution the inserted book and the separating planes (dashed) are drawn
/// too; without one only the stored books appear.
std::string svg_document(const Instance& inst, const std::optional<DecisionVector>& x,
                         const SvgOptions& opts = {});

/// Throws std::runtime_error when the file cannot be written.
void render_svg(const Instance& inst, const std::optional<DecisionVector>& x,
                const std::string& path, const SvgOptions& opts = {});

}  // namespace bookshelf
