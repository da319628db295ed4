#include "nuseg/imageio.hpp"

#include <stdexcept>

#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wdeprecated-enum-enum-conversion"
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#pragma GCC diagnostic pop

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

namespace nuseg {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

}  // namespace

RgbImage load_rgb(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (m.empty()) fail(path, "unreadable or unsupported image file");
    if (m.depth() != CV_8U) fail(path, "unsupported bit depth (expected 8-bit)");
    if (m.channels() != 3 && m.channels() != 4)
        fail(path, "unsupported channel count " + std::to_string(m.channels()) +
                       " (expected 3 or 4)");

    RgbImage img(m.cols, m.rows);
    for (int y = 0; y < m.rows; ++y) {
        const std::uint8_t* row = m.ptr<std::uint8_t>(y);
        const int ch = m.channels();
        for (int x = 0; x < m.cols; ++x) {
            // OpenCV stores BGR(A).
            img.set(x, y, row[x * ch + 2], row[x * ch + 1], row[x * ch + 0]);
        }
    }
    return img;
}

void write_rgb(const RgbImage& img, const std::string& path) {
    cv::Mat m(img.height, img.width, CV_8UC3);
    for (int y = 0; y < img.height; ++y) {
        std::uint8_t* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < img.width; ++x) {
            row[x * 3 + 0] = img.at(x, y, 2);
            row[x * 3 + 1] = img.at(x, y, 1);
            row[x * 3 + 2] = img.at(x, y, 0);
        }
    }
    if (!cv::imwrite(path, m)) fail(path, "failed to write image");
}

LabelMap load_labelmap(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (m.empty()) fail(path, "unreadable or unsupported image file");
    if (m.channels() != 1) fail(path, "label map must be single-channel");

    LabelMap map(m.cols, m.rows);
    if (m.depth() == CV_16U) {
        for (int y = 0; y < m.rows; ++y) {
            const std::uint16_t* row = m.ptr<std::uint16_t>(y);
            for (int x = 0; x < m.cols; ++x) map.at(x, y) = row[x];
        }
    } else if (m.depth() == CV_8U) {
        for (int y = 0; y < m.rows; ++y) {
            const std::uint8_t* row = m.ptr<std::uint8_t>(y);
            for (int x = 0; x < m.cols; ++x) map.at(x, y) = row[x];
        }
    } else {
        fail(path, "label map must be 8- or 16-bit");
    }
    return map;
}

void write_labelmap(const LabelMap& map, const std::string& path) {
    for (std::uint32_t v : map.data) {
        if (v > 65535)
            fail(path, "label id " + std::to_string(v) + " exceeds 16-bit range");
    }
    cv::Mat m(map.height, map.width, CV_16UC1);
    for (int y = 0; y < map.height; ++y) {
        std::uint16_t* row = m.ptr<std::uint16_t>(y);
        for (int x = 0; x < map.width; ++x)
            row[x] = static_cast<std::uint16_t>(map.at(x, y));
    }
    if (!cv::imwrite(path, m)) fail(path, "failed to write label map");
}

AnnotationPolygons parse_annotation_xml(const std::string& path) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_xml(path, tree);
    } catch (const pt::xml_parser_error& e) {
        fail(path, std::string("malformed annotation XML: ") + e.what());
    }

    AnnotationPolygons out;
    const auto annotations = tree.get_child_optional("Annotations");
    if (!annotations) fail(path, "missing Annotations root element");

    for (const auto& [ann_name, ann] : *annotations) {
        if (ann_name != "Annotation") continue;
        const auto regions = ann.get_child_optional("Regions");
        if (!regions) continue;
        for (const auto& [reg_name, reg] : *regions) {
            if (reg_name != "Region") continue;
            std::vector<Vec2> poly;
            const auto vertices = reg.get_child_optional("Vertices");
            if (vertices) {
                for (const auto& [v_name, v] : *vertices) {
                    if (v_name != "Vertex") continue;
                    Vec2 p;
                    p.x = v.get<double>("<xmlattr>.X");
                    p.y = v.get<double>("<xmlattr>.Y");
                    poly.push_back(p);
                }
            }
            if (poly.size() < 3) {
                ++out.skipped_regions;
                continue;
            }
            out.polygons.push_back(std::move(poly));
        }
    }
    return out;
}

LabelMap rasterize(const AnnotationPolygons& polys, int width, int height) {
    if (width <= 0 || height <= 0)
        throw std::runtime_error("rasterize: non-positive canvas dimensions");
    LabelMap map(width, height);
    std::uint32_t id = 0;
    for (const auto& poly : polys.polygons) {
        ++id;
        fill_polygon(poly, width, height,
                     [&](int x, int y) { map.at(x, y) = id; });
    }
    return map;
}

RgbImage render_overlay(const RgbImage& img, const LabelMap& map) {
    RgbImage out = img;
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            const std::uint32_t v = map.at(x, y);
            if (v == 0) continue;
            bool boundary = false;
            const int nx[4] = {x - 1, x + 1, x, x};
            const int ny[4] = {y, y, y - 1, y + 1};
            for (int k = 0; k < 4 && !boundary; ++k) {
                if (!map.in_bounds(nx[k], ny[k]) || map.at(nx[k], ny[k]) != v)
                    boundary = true;
            }
            if (boundary) out.set(x, y, 0, 255, 0);
        }
    }
    return out;
}

}  // namespace nuseg
