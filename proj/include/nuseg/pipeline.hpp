#pragma once

#include "nuseg/config.hpp"
#include "nuseg/fp_filter.hpp"
#include "nuseg/image.hpp"
#include "nuseg/selftrain.hpp"

namespace nuseg {

/// Label maps captured after each reported stage plus the per-stage reports.
/// s1m12: blockwise thresholding + size/shape cleanup. s1m123: after
/// false-positive removal. final_map: after self-training and shape
/// refinement.
struct StageOutputs {
    LabelMap s1m12;
    LabelMap s1m123;
    LabelMap final_map;
    std::vector<FpDecision> fp_decisions;
    RelabelReport relabel_report;
};

/// Run both stages end to end. Deterministic for a fixed config; throws
/// std::runtime_error with stage context on failure.
StageOutputs run_pipeline(const RgbImage& img, const PipelineConfig& cfg);

}  // namespace nuseg
