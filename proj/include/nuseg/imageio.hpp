#pragma once

#include <string>
#include <vector>

#include "nuseg/geometry.hpp"
#include "nuseg/image.hpp"

namespace nuseg {

/// Closed polygons parsed from an Aperio ImageScope annotation file,
/// one per Region, vertex order preserved. Regions with fewer than three
/// vertices are dropped and counted in skipped_regions.
struct AnnotationPolygons {
    std::vector<std::vector<Vec2>> polygons;
    int skipped_regions = 0;
};

/// Load an 8-bit 3-channel PNG or TIFF. An alpha channel is stripped.
/// Throws std::runtime_error naming the path for unreadable files and for
/// unsupported bit depths or channel counts.
RgbImage load_rgb(const std::string& path);

/// Write an 8-bit RGB PNG.
void write_rgb(const RgbImage& img, const std::string& path);

/// Load a label map stored as a single-channel 8- or 16-bit PNG.
LabelMap load_labelmap(const std::string& path);

/// Write a label map as a 16-bit single-channel PNG, ids stored verbatim.
/// Throws if any id exceeds 65535 rather than truncating.
void write_labelmap(const LabelMap& map, const std::string& path);

/// Parse Annotations/Annotation/Regions/Region/Vertices/Vertex (X, Y) XML.
AnnotationPolygons parse_annotation_xml(const std::string& path);

/// Paint polygon k (1-based) with id k using even-odd scanline fill sampled
/// at pixel centers. Later polygons overwrite earlier ones; vertices outside
/// the canvas are clipped.
LabelMap rasterize(const AnnotationPolygons& polys, int width, int height);

/// Diagnostic rendering: instance boundary pixels in pure green over the image.
RgbImage render_overlay(const RgbImage& img, const LabelMap& map);

}  // namespace nuseg
