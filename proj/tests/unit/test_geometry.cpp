#include <gtest/gtest.h>

#include <cmath>

#include "mitodet/error.hpp"
#include "mitodet/geometry.hpp"
#include "mitodet/random.hpp"

using namespace mitodet;

namespace {

// Counts unit cells [i, i+1) x [j, j+1) covered by both boxes; only valid for
// integer-aligned boxes.
double pixel_iou(const BoundingBox& a, const BoundingBox& b) {
  int inter = 0, uni = 0;
  for (int y = -50; y < 50; ++y) {
    for (int x = -50; x < 50; ++x) {
      const bool in_a = x >= a.x_min() && x < a.x_max() && y >= a.y_min() && y < a.y_max();
      const bool in_b = x >= b.x_min() && x < b.x_max() && y >= b.y_min() && y < b.y_max();
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  return static_cast<double>(inter) / uni;
}

BoundingBox random_box(Rng& rng) {
  const double x = rng.uniform(0, 100), y = rng.uniform(0, 100);
  return BoundingBox(x, y, x + rng.uniform(0.5, 60), y + rng.uniform(0.5, 60));
}

Detection det(double x0, double y0, double x1, double y1, double score,
              CellClass cls = CellClass::kMitotic) {
  return {BoundingBox(x0, y0, x1, y1), cls, score};
}

}  // namespace

TEST(BoundingBox, RejectsDegenerateBoxes) {
  EXPECT_THROW(BoundingBox(0, 0, 0, 10), ValidationError);
  EXPECT_THROW(BoundingBox(5, 0, 1, 10), ValidationError);
  EXPECT_THROW(BoundingBox(0, 0, NAN, 10), ValidationError);
  EXPECT_THROW(BoundingBox(0, 0, INFINITY, 10), ValidationError);
  EXPECT_NO_THROW(BoundingBox(-5, -5, 1, 1));
}

TEST(BoundingBox, XywhRoundTrip) {
  const BoundingBox b = BoundingBox::from_xywh(10, 20, 30, 40);
  EXPECT_EQ(b, BoundingBox(10, 20, 40, 60));
  EXPECT_DOUBLE_EQ(b.area(), 1200);
}

TEST(CellClass, StableIds) {
  EXPECT_EQ(class_id(CellClass::kMitotic), 1);
  EXPECT_EQ(class_id(CellClass::kNonMitotic), 2);
  EXPECT_EQ(class_from_id(2), CellClass::kNonMitotic);
  EXPECT_THROW(class_from_id(3), ValidationError);
  EXPECT_EQ(class_name(CellClass::kMitotic), "mitotic");
  EXPECT_EQ(class_from_name("nonmitotic"), CellClass::kNonMitotic);
}

TEST(Detection, ScoreMustBeInUnitInterval) {
  EXPECT_THROW(make_detection(BoundingBox(0, 0, 1, 1), CellClass::kMitotic, 1.01), ValidationError);
  EXPECT_THROW(make_detection(BoundingBox(0, 0, 1, 1), CellClass::kMitotic, -0.1), ValidationError);
  EXPECT_NO_THROW(make_detection(BoundingBox(0, 0, 1, 1), CellClass::kMitotic, 0.0));
}

TEST(Iou, Examples) {
  EXPECT_EQ(iou(BoundingBox(0, 0, 10, 10), BoundingBox(0, 0, 10, 10)), 1.0);
  EXPECT_EQ(iou(BoundingBox(0, 0, 10, 10), BoundingBox(20, 20, 30, 30)), 0.0);
  EXPECT_DOUBLE_EQ(iou(BoundingBox(0, 0, 10, 10), BoundingBox(5, 0, 15, 10)), 1.0 / 3.0);
  EXPECT_EQ(iou(BoundingBox(0, 0, 10, 10), BoundingBox(10, 0, 20, 10)), 0.0);  // touching edges
}

TEST(Iou, MatchesPixelCountOnIntegerBoxes) {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    auto r = [&] { return static_cast<double>(rng.below(40)) - 20; };
    const double ax = r(), ay = r(), bx = r(), by = r();
    const BoundingBox a(ax, ay, ax + 1 + rng.below(25), ay + 1 + rng.below(25));
    const BoundingBox b(bx, by, bx + 1 + rng.below(25), by + 1 + rng.below(25));
    EXPECT_NEAR(iou(a, b), pixel_iou(a, b), 1e-12);
  }
}

TEST(Iou, SymmetricBoundedAndReflexive) {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const BoundingBox a = random_box(rng), b = random_box(rng);
    EXPECT_EQ(iou(a, b), iou(b, a));
    EXPECT_GE(iou(a, b), 0.0);
    EXPECT_LE(iou(a, b), 1.0);
    EXPECT_EQ(iou(a, a), 1.0);
  }
}

TEST(ClipBox, Examples) {
  const BoundingBox region(0, 0, 256, 256);
  EXPECT_EQ(clip_box(BoundingBox(65, 65, 135, 135), region), BoundingBox(65, 65, 135, 135));
  EXPECT_EQ(clip_box(BoundingBox(-10, -10, 20, 20), region), BoundingBox(0, 0, 20, 20));
  EXPECT_FALSE(clip_box(BoundingBox(300, 300, 400, 400), region).has_value());
  EXPECT_FALSE(clip_box(BoundingBox(256, 0, 300, 10), region).has_value());
}

TEST(CentroidToBox, Examples) {
  EXPECT_EQ(centroid_to_box({100, 100}, 70), BoundingBox(65, 65, 135, 135));
  EXPECT_EQ(centroid_to_box({0, 0}, 70), BoundingBox(-35, -35, 35, 35));
  EXPECT_THROW(centroid_to_box({100, 100}, 0), ValidationError);
}

TEST(CentroidToBox, CenterRecoversCentroid) {
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const Point c{rng.uniform(0, 2000), rng.uniform(0, 2000)};
    const Point got = centroid_to_box(c, 70).center();
    EXPECT_NEAR(got.x, c.x, 1e-9);
    EXPECT_NEAR(got.y, c.y, 1e-9);
  }
}

TEST(Nms, IdenticalBoxesKeepHigherScore) {
  const std::vector<Detection> in{det(0, 0, 10, 10, 0.8), det(0, 0, 10, 10, 0.9)};
  const auto out = nms(in, 0.5);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].score, 0.9);
}

TEST(Nms, DisjointBoxesSurvive) {
  const std::vector<Detection> in{det(0, 0, 10, 10, 0.9), det(50, 50, 60, 60, 0.8)};
  EXPECT_EQ(nms(in, 0.5).size(), 2u);
}

TEST(Nms, ChainKeepsEnds) {
  // IoU(A,B) = IoU(B,C) = 0.6 and IoU(A,C) = 1/3: B falls to A, and C survives
  // because B is no longer kept.
  const Detection a = det(0, 0, 10, 1, 0.9);
  const Detection b = det(2.5, 0, 12.5, 1, 0.8);
  const Detection c = det(5, 0, 15, 1, 0.7);
  ASSERT_DOUBLE_EQ(iou(a.box, b.box), 0.6);
  ASSERT_DOUBLE_EQ(iou(b.box, c.box), 0.6);
  ASSERT_LT(iou(a.box, c.box), 0.5);
  const auto out = nms(std::vector<Detection>{b, c, a}, 0.5);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0], a);
  EXPECT_EQ(out[1], c);
}

TEST(Nms, ClassWise) {
  const std::vector<Detection> in{det(0, 0, 10, 10, 0.9, CellClass::kMitotic),
                                  det(0, 0, 10, 10, 0.8, CellClass::kNonMitotic)};
  EXPECT_EQ(nms(in, 0.5).size(), 2u);
}

TEST(Nms, TiesKeepInputOrder) {
  const std::vector<Detection> in{det(0, 0, 10, 10, 0.5), det(1, 0, 11, 10, 0.5)};
  const auto r = nms_indices(in, 0.5);
  ASSERT_EQ(r.kept.size(), 1u);
  EXPECT_EQ(r.kept[0], 0u);
  EXPECT_EQ(r.suppressed_by[1], 0u);
}

TEST(Nms, RejectsBadThreshold) {
  const std::vector<Detection> in{det(0, 0, 1, 1, 0.5)};
  EXPECT_THROW(nms(in, 0.0), ValidationError);
  EXPECT_THROW(nms(in, 1.5), ValidationError);
}

TEST(Nms, Properties) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Detection> in;
    const int n = 1 + static_cast<int>(rng.below(30));
    for (int i = 0; i < n; ++i) {
      in.push_back({random_box(rng), rng.uniform() < 0.5 ? CellClass::kMitotic : CellClass::kNonMitotic,
                    rng.uniform()});
    }
    const double t = rng.uniform(0.1, 1.0);
    const NmsResult r = nms_indices(in, t);
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (!r.suppressed_by[i]) continue;
      const Detection& k = in[*r.suppressed_by[i]];
      EXPECT_EQ(k.cell_class, in[i].cell_class);
      EXPECT_GE(k.score, in[i].score);
      EXPECT_GE(iou(k.box, in[i].box), t);
    }
    for (std::size_t a = 0; a < r.kept.size(); ++a) {
      for (std::size_t b = a + 1; b < r.kept.size(); ++b) {
        const Detection& x = in[r.kept[a]];
        const Detection& y = in[r.kept[b]];
        EXPECT_GE(x.score, y.score);
        if (x.cell_class == y.cell_class) EXPECT_LT(iou(x.box, y.box), t);
      }
    }
    // threshold 1 without exact duplicates keeps everything
    EXPECT_EQ(nms(in, 1.0).size(), in.size());
  }
}
