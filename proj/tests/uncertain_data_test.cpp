#include <sstream>

#include <gtest/gtest.h>

#include "rpc/synthetic.hpp"
#include "rpc/uncertain_data.hpp"

namespace rpc {
namespace {

UncertainDataset parse(const std::string& text, DatasetFormat fmt = DatasetFormat::Auto) {
    std::istringstream in(text);
    return parse_dataset(in, "test.csv", fmt);
}

std::string error_of(const std::string& text) {
    try {
        parse(text);
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

TEST(LoadDataset, GroupsRowsByObjectInFirstAppearanceOrder) {
    const auto ds = parse("object_id,dim_1,dim_2\na,1,2\nb,5,6\na,3,4\n");
    ASSERT_EQ(ds.n(), 2u);
    EXPECT_EQ(ds.d, 2u);
    EXPECT_EQ(ds.objects[0].id, "a");
    EXPECT_EQ(ds.objects[1].id, "b");
    const auto& a = std::get<EmpiricalModel>(ds.objects[0].model);
    ASSERT_EQ(a.instances.size(), 2u);
    EXPECT_EQ(a.instances[1][0], 3.0);
    EXPECT_FALSE(a.weights.has_value());
}

TEST(LoadDataset, NonNumericCoordinateNamesLine) {
    const auto msg = error_of("object_id,dim_1,dim_2\na,1,2\na,x,4\n");
    EXPECT_NE(msg.find("test.csv:3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'x'"), std::string::npos) << msg;
}

TEST(LoadDataset, RejectsMalformedInput) {
    EXPECT_NE(error_of("object_id,dim_1,dim_2\na,1\n").find("test.csv:2"), std::string::npos);
    EXPECT_NE(error_of("object_id,dim_1\na,inf\n").find("not a finite number"), std::string::npos);
    EXPECT_NE(error_of("id,dim_1\na,1\n").find("object_id"), std::string::npos);
    EXPECT_NE(error_of("object_id,dim_1\n").find("no data rows"), std::string::npos);
    EXPECT_NE(error_of("").find("empty file"), std::string::npos);
    EXPECT_NE(error_of("object_id,mean_1,std_1\na,0,-1\n").find("negative"), std::string::npos);
    EXPECT_NE(error_of("object_id,mean_1,std_1\na,0,1\na,0,1\n").find("duplicate"), std::string::npos);
}

TEST(LoadDataset, WeightsMustSumToOne) {
    const auto ok = parse("object_id,dim_1,weight\na,1,0.25\na,2,0.75\nb,3,1\n");
    const auto& a = std::get<EmpiricalModel>(ok.objects[0].model);
    ASSERT_TRUE(a.weights.has_value());
    EXPECT_DOUBLE_EQ((*a.weights)[1], 0.75);

    const auto msg = error_of("object_id,dim_1,weight\na,1,0.25\na,2,0.5\nb,3,1\n");
    EXPECT_NE(msg.find("weights sum"), std::string::npos) << msg;
    EXPECT_NE(msg.find("test.csv:3"), std::string::npos) << msg;
}

TEST(LoadDataset, GaussianRoundTrip) {
    const auto blobs = make_blobs(150, 3, 2, 8.0, 11);
    const auto ds = gaussianize(blobs.points, blobs.labels, 0.2);
    std::ostringstream out;
    write_gaussian_csv(out, ds);
    const auto back = parse(out.str());
    ASSERT_EQ(back.n(), 150u);
    ASSERT_EQ(back.d, 2u);
    for (std::size_t i = 0; i < back.n(); ++i) {
        const auto& g = std::get<GaussianModel>(back.objects[i].model);
        const auto& orig = std::get<GaussianModel>(ds.objects[i].model);
        EXPECT_EQ(back.objects[i].id, ds.objects[i].id);
        EXPECT_EQ(g.mean, orig.mean);
        EXPECT_EQ(g.stddev, orig.stddev);
    }
}

TEST(LoadLabels, MapsStringsToDenseIds) {
    auto ds = parse("object_id,dim_1\na,1\nb,2\nc,3\n");
    std::istringstream labels("object_id,label\nc,cat\na,dog\nb,cat\n");
    parse_labels(labels, "labels.csv", ds);
    ASSERT_TRUE(ds.labels.has_value());
    EXPECT_EQ(*ds.labels, (std::vector<int>{1, 0, 0}));
    EXPECT_EQ(ds.label_names, (std::vector<std::string>{"cat", "dog"}));

    auto missing = parse("object_id,dim_1\na,1\nb,2\n");
    std::istringstream partial("object_id,label\na,x\n");
    EXPECT_THROW(parse_labels(partial, "labels.csv", missing), Error);
    std::istringstream unknown("object_id,label\nz,x\n");
    EXPECT_THROW(parse_labels(unknown, "labels.csv", missing), Error);
}

TEST(Gaussianize, ConstantAttributeGetsZeroStddev) {
    Matrix pts(4, 2);
    pts << 1, 7, 2, 7, 3, 7, 4, 7;
    const auto ds = gaussianize(pts, std::nullopt, 0.3);
    for (const auto& o : ds.objects) EXPECT_EQ(std::get<GaussianModel>(o.model).stddev[1], 0.0);
}

TEST(Gaussianize, UsesPopulationStddev) {
    Matrix pts(2, 2);
    pts << 0, 0, 2, 0;
    const auto ds = gaussianize(pts, std::nullopt, 0.5);
    const auto& g = std::get<GaussianModel>(ds.objects[1].model);
    EXPECT_DOUBLE_EQ(g.stddev[0], 0.5);
    EXPECT_EQ(g.stddev[1], 0.0);
    EXPECT_EQ(g.mean, Vector((Vector(2) << 2, 0).finished()));
}

TEST(Gaussianize, PreservesCardinalityAndRejectsBadInput) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    Matrix pts(50, 3);
    for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = g(rng);
    EXPECT_EQ(gaussianize(pts, std::nullopt, 0.1).n(), 50u);
    EXPECT_THROW(gaussianize(Matrix(0, 3), std::nullopt, 0.1), Error);
    EXPECT_THROW(gaussianize(pts, std::nullopt, 0.0), Error);
}

TEST(SampleWorld, DegenerateDistributionsAreExact) {
    const auto blobs = make_blobs(20, 2, 3, 5.0, 1);
    const auto points_ds = blobs_as_points(blobs);
    std::mt19937_64 rng(9);
    EXPECT_EQ(sample_world(points_ds, rng).points, blobs.points);

    auto gauss = gaussianize(blobs.points, std::nullopt, 0.5);
    for (auto& o : gauss.objects) std::get<GaussianModel>(o.model).stddev.setZero();
    EXPECT_EQ(sample_world(gauss, rng).points, blobs.points);
}

TEST(SampleWorld, WeightedEmpiricalFrequency) {
    const auto ds = parse("object_id,dim_1,weight\na,0,0.9\na,1,0.1\n");
    std::mt19937_64 rng(2024);
    int first = 0;
    for (int t = 0; t < 10000; ++t) first += sample_world(ds, rng).points(0, 0) == 0.0 ? 1 : 0;
    EXPECT_GE(first, 8800);
    EXPECT_LE(first, 9200);
}

TEST(SampleWorld, EmpiricalRowsAreInstances) {
    const auto ds = parse("object_id,dim_1,dim_2\na,0,0\na,1,1\na,2,2\nb,5,5\nb,6,7\n");
    std::mt19937_64 rng(5);
    for (int t = 0; t < 200; ++t) {
        const auto w = sample_world(ds, rng);
        ASSERT_EQ(w.n(), 2u);
        ASSERT_EQ(w.d(), 2u);
        for (std::size_t i = 0; i < ds.n(); ++i) {
            const auto& inst = std::get<EmpiricalModel>(ds.objects[i].model).instances;
            const bool found = std::any_of(inst.begin(), inst.end(),
                                           [&](const Instance& x) { return x == w.points.row(i).transpose(); });
            EXPECT_TRUE(found);
        }
    }
}

TEST(SampleEnsemble, DeterministicAndShaped) {
    const auto blobs = make_blobs(30, 3, 2, 6.0, 4);
    const auto ds = gaussianize(blobs.points, blobs.labels, 0.1);
    const auto a = sample_ensemble(ds, 7, 99);
    const auto b = sample_ensemble(ds, 7, 99);
    const auto c = sample_ensemble(ds, 7, 100);
    ASSERT_EQ(a.size(), 7u);
    for (std::size_t w = 0; w < a.size(); ++w) {
        EXPECT_EQ(a.worlds[w].points, b.worlds[w].points);
        EXPECT_EQ(a.worlds[w].n(), 30u);
        EXPECT_TRUE(a.worlds[w].points.allFinite());
    }
    EXPECT_NE(a.worlds[0].points, c.worlds[0].points);
    EXPECT_NE(a.worlds[0].points, a.worlds[1].points);
    // A world depends only on its own index: a longer ensemble extends a shorter one.
    const auto longer = sample_ensemble(ds, 9, 99);
    EXPECT_EQ(longer.worlds[6].points, a.worlds[6].points);

    EXPECT_EQ(sample_ensemble(ds, 1, 5).size(), 1u);
    EXPECT_THROW(sample_ensemble(ds, 0, 5), Error);
}

TEST(SampleEnsemble, DeterministicObjectsGiveIdenticalWorlds) {
    const auto ds = blobs_as_points(make_blobs(12, 2, 2, 4.0, 8));
    const auto ens = sample_ensemble(ds, 100, 1);
    for (const auto& w : ens.worlds) EXPECT_EQ(w.points, ens.worlds.front().points);
}

}  // namespace
}  // namespace rpc
