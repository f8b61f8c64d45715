#pragma once

// Two-stage cascade: person detection on the frame, per-person crop, attire
// detection on the crop, crop-local boxes mapped back to frame coordinates.

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "attire/augment.hpp"
#include "attire/core.hpp"
#include "attire/decode.hpp"

namespace attire {

struct DecodeParams {
    double conf_floor{0.25};
    double nms_iou{0.45};
};

// Crop context passed to the attire stage; person_index < 0 means the
// person stage (whole frame).
struct CropRegion {
    int person_index{-1};
    double offset_x{0};
    double offset_y{0};
    double width{0};
    double height{0};
};

class DetectorBackend {
  public:
    virtual ~DetectorBackend() = default;

    // Returns detections in region-local coordinates (frame coordinates for
    // the person stage).
    virtual std::vector<Detection> detect(const FrameRef& frame,
                                          const CropRegion& region) = 0;

    virtual const std::vector<ClassLabel>& vocabulary() const = 0;

    int call_count() const { return calls_; }

  protected:
    int calls_{0};
};

// Reads "<frame_id>.ygt" (person stage) or "<frame_id>_p<index>.ygt" (attire
// stage) from a directory and decodes them.
class TensorFileBackend : public DetectorBackend {
  public:
    TensorFileBackend(std::string dir, DecodeParams params,
                      std::vector<ClassLabel> vocab);

    std::vector<Detection> detect(const FrameRef& frame,
                                  const CropRegion& region) override;
    const std::vector<ClassLabel>& vocabulary() const override { return vocab_; }

  private:
    std::string dir_;
    DecodeParams params_;
    std::vector<ClassLabel> vocab_;
};

// Scripted detections from an annotation file, lines
// "frame_id,class_name,cx,cy,w,h,score" in frame coordinates. For the attire
// stage only detections whose center falls inside the crop are returned,
// translated to crop-local coordinates.
class ScriptedBackend : public DetectorBackend {
  public:
    ScriptedBackend(const std::string& path, std::vector<ClassLabel> vocab);

    std::vector<Detection> detect(const FrameRef& frame,
                                  const CropRegion& region) override;
    const std::vector<ClassLabel>& vocabulary() const override { return vocab_; }

  private:
    std::map<long long, std::vector<Detection>> by_frame_;
    std::vector<ClassLabel> vocab_;
};

struct FrameResult {
    FrameRef frame;
    std::vector<Detection> persons;
    std::vector<std::pair<int, Detection>> attire;  // (person index, frame coords)
    bool no_person{false};
};

// Integer-rounded sub-image extraction (round half away from zero).
std::pair<RgbImage, std::pair<int, int>> crop(const RgbImage& frame_image,
                                              const BoundingBox& box);

// Integer crop extent without pixel data, for image-free streams.
struct CropExtent {
    int x0, y0, x1, y1;
};
CropExtent crop_extent(const BoundingBox& box);  // throws DegenerateCrop

std::vector<Detection> detect(const FrameRef& frame, DetectorBackend& backend,
                              const CropRegion& region = {});

FrameResult run_frame(const FrameRef& frame, DetectorBackend& person_backend,
                      DetectorBackend& attire_backend);

}  // namespace attire
