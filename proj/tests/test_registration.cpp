#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "fixtures.hpp"
#include "printacc/error.hpp"
#include "printacc/registration.hpp"

using namespace printacc;

namespace {

RigidTransform make_transform(const Eigen::Matrix3d& r, const Vector3& t)
{
    RigidTransform out;
    out.rotation = r;
    out.translation = t;
    return out;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

} // namespace

TEST_CASE("kabsch of identical sets is the identity")
{
    Rng rng(3);
    const auto pts = fixtures::random_points(rng, 50, 40);
    const RigidTransform t = kabsch_step(pts, pts);
    CHECK(max_abs(t.rotation - Eigen::Matrix3d::Identity()) < 1e-12);
    CHECK(t.translation.norm() < 1e-12);
}

TEST_CASE("kabsch recovers a 30 degree z rotation plus shift")
{
    Rng rng(4);
    const auto src = fixtures::random_points(rng, 40, 50);
    const RigidTransform truth = make_transform(fixtures::rotation_about(Vector3::UnitZ(), M_PI / 6), Vector3(5, -3, 2));
    std::vector<Point3> dst;
    for (const auto& p : src)
        dst.push_back(truth.apply(p));
    const RigidTransform got = kabsch_step(src, dst);
    CHECK(max_abs(got.rotation - truth.rotation) < 1e-9);
    CHECK((got.translation - truth.translation).norm() < 1e-9);
    CHECK(got.is_proper_rotation());
}

TEST_CASE("kabsch on collinear points is still a proper rotation with zero residual")
{
    const std::vector<Point3> src{{0, 0, 0}, {1, 1, 1}, {3, 3, 3}};
    const RigidTransform truth = make_transform(fixtures::rotation_about(Vector3(1, -2, 0.5), 0.7), Vector3(1, 2, 3));
    std::vector<Point3> dst;
    for (const auto& p : src)
        dst.push_back(truth.apply(p));
    const RigidTransform got = kabsch_step(src, dst);
    CHECK(got.is_proper_rotation());
    std::vector<Point3> moved;
    for (const auto& p : src)
        moved.push_back(got.apply(p));
    CHECK(mean_squared_error(moved, dst) < 1e-20);
}

TEST_CASE("kabsch never returns a reflection")
{
    // Mirror image: the unconstrained optimum would be a reflection.
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto src = fixtures::random_points(rng, 10, 10);
        std::vector<Point3> dst;
        for (const auto& p : src)
            dst.emplace_back(-p.x(), p.y(), p.z());
        CHECK(kabsch_step(src, dst).is_proper_rotation());
    }
}

TEST_CASE("kabsch errors")
{
    const std::vector<Point3> a{{0, 0, 0}, {1, 0, 0}};
    const std::vector<Point3> b{{0, 0, 0}};
    CHECK_THROWS_AS(kabsch_step(a, b), GeometryError);
    CHECK_THROWS_AS(kabsch_step(std::vector<Point3>{}, std::vector<Point3>{}), GeometryError);
    const std::vector<Point3> same{{2, 2, 2}, {2, 2, 2}, {2, 2, 2}};
    CHECK_THROWS_WITH_AS(kabsch_step(same, same), doctest::Contains("coincident"), GeometryError);
}

TEST_CASE("apply_transform")
{
    PointCloud cloud({Point3(0, 0, 0), Point3(1, 2, 3)}, {Vector3(1, 0, 0), Vector3(0, 1, 0)});
    SUBCASE("identity")
    {
        const auto out = apply_transform(cloud, RigidTransform::identity());
        CHECK((out.points[1] - cloud.points[1]).norm() == 0.0);
    }
    SUBCASE("translation moves points but not normals")
    {
        const auto out = apply_transform(cloud, make_transform(Eigen::Matrix3d::Identity(), Vector3(1, 0, 0)));
        CHECK((out.points[0] - Point3(1, 0, 0)).norm() == 0.0);
        CHECK((out.normals[0] - Vector3(1, 0, 0)).norm() == 0.0);
    }
    SUBCASE("T then inverse returns the cloud")
    {
        const RigidTransform t = make_transform(fixtures::rotation_about(Vector3(0.3, 1, -1), 1.1), Vector3(4, -5, 6));
        const auto back = apply_transform(apply_transform(cloud, t), t.inverse());
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            CHECK((back.points[i] - cloud.points[i]).norm() < 1e-12);
            CHECK((back.normals[i] - cloud.normals[i]).norm() < 1e-12);
        }
    }
}

TEST_CASE("ICP of a cloud against itself converges in one iteration")
{
    const PointCloud cloud = sample_reference_surface(ReferencePrism(), 50'000 - 8, 42);
    const IcpResult r = icp_align(cloud, cloud);
    CHECK(r.converged);
    CHECK(r.iterations == 1);
    CHECK(r.final_cost < 1e-12);
    CHECK(max_abs(r.transform.rotation - Eigen::Matrix3d::Identity()) < 1e-12);
}

TEST_CASE("ICP undoes a 10 degree, 15 mm perturbation")
{
    const ReferencePrism prism;
    const PointCloud target = sample_reference_surface(prism, 1000, 42);
    const Point3 c = prism.center();
    const Eigen::Matrix3d r = fixtures::rotation_about(Vector3(0.2, 0.5, 1.0), 10.0 * M_PI / 180.0);
    const RigidTransform perturb = make_transform(r, c - r * c + Vector3(15, 0, 0) / std::sqrt(1.0));
    const PointCloud source = apply_transform(target, perturb);

    const IcpResult res = icp_align(source, target);
    CHECK(res.final_cost < 1e-10);
    CHECK(res.iterations <= 100);
    const RigidTransform expected = perturb.inverse();
    CHECK(max_abs(res.transform.rotation - expected.rotation) < 1e-9);
    CHECK((res.transform.translation - expected.translation).norm() < 1e-7);
}

TEST_CASE("ICP cost never increases and transforms stay proper")
{
    Rng rng(11);
    const ReferencePrism prism;
    const PointCloud target = sample_reference_surface(prism, 2000, 1);
    for (int trial = 0; trial < 10; ++trial) {
        const auto r = fixtures::rotation_about(fixtures::random_unit(rng), rng.uniform(0, 0.35));
        const Vector3 t = 10.0 * fixtures::random_unit(rng);
        // A different sample of the same surface, so costs stay positive.
        const PointCloud scan = apply_transform(sample_reference_surface(prism, 1500, 100 + trial), make_transform(r, t));
        const IcpResult res = icp_align(scan, target);
        CHECK(res.transform.is_proper_rotation());
        for (std::size_t k = 1; k < res.cost_history.size(); ++k)
            CHECK(res.cost_history[k] <= res.cost_history[k - 1] + 1e-12);
        CHECK(res.final_cost == res.cost_history.back());
    }
}

TEST_CASE("ICP with 1% far outliers still recovers the inlier alignment")
{
    const ReferencePrism prism;
    const PointCloud target = sample_reference_surface(prism, 3000, 42);
    const Point3 c = prism.center();
    const Eigen::Matrix3d r = fixtures::rotation_about(Vector3(1, 0.3, -0.2), 4.0 * M_PI / 180.0);
    const RigidTransform perturb = make_transform(r, c - r * c + Vector3(3, -2, 1));
    PointCloud source = apply_transform(target, perturb);
    Rng rng(8);
    for (std::size_t i = 0; i < source.size(); i += 100)
        source.points[i] += 100.0 * fixtures::random_unit(rng);

    const IcpResult res = icp_align(source, target);
    CHECK(res.converged);
    CHECK(res.final_cost > 0.0);
    const RigidTransform expected = perturb.inverse();
    CHECK((res.transform.translation - expected.translation).norm() < 0.5);
}

TEST_CASE("ICP final cost does not depend on a small initial shift")
{
    const ReferencePrism prism;
    const PointCloud target = sample_reference_surface(prism, 1000, 42);
    Rng rng(12);
    for (int trial = 0; trial < 5; ++trial) {
        const Vector3 shift = rng.uniform(0.5, 4.0) * fixtures::random_unit(rng);
        const PointCloud source = apply_transform(target, make_transform(Eigen::Matrix3d::Identity(), shift));
        const IcpResult a = icp_align(target, target);
        const IcpResult b = icp_align(source, target);
        CHECK(std::abs(a.final_cost - b.final_cost) < 1e-9);
    }
}

TEST_CASE("ICP iteration limit")
{
    const ReferencePrism prism;
    const PointCloud target = sample_reference_surface(prism, 1000, 42);
    const PointCloud source =
        apply_transform(target, make_transform(fixtures::rotation_about(Vector3::UnitZ(), 0.2), Vector3(8, 3, 0)));
    IcpConfig cfg;
    cfg.max_iterations = 1;
    const IcpResult r = icp_align(source, target, cfg);
    CHECK(r.iterations == 1);
    CHECK_FALSE(r.converged);
    CHECK(r.cost_history.size() == 2);
}

TEST_CASE("ICP input validation")
{
    const PointCloud some({Point3(0, 0, 0), Point3(1, 0, 0)});
    CHECK_THROWS_AS(icp_align(PointCloud(), some), GeometryError);
    CHECK_THROWS_AS(icp_align(some, PointCloud()), GeometryError);
    IcpConfig bad;
    bad.cost_change_tolerance = 0.0;
    CHECK_THROWS_AS(icp_align(some, some, bad), DomainError);
    bad = {};
    bad.max_iterations = 0;
    CHECK_THROWS_AS(icp_align(some, some, bad), DomainError);
}

TEST_CASE("transform JSON round trip")
{
    const RigidTransform t = make_transform(fixtures::rotation_about(Vector3(1, 1, 0), 0.3), Vector3(1.5, -2, 3));
    const std::string text = transform_to_json(t);
    const auto j = nlohmann::json::parse(text);
    CHECK(j.at("R").size() == 9);
    CHECK(j.at("t").size() == 3);
    CHECK(j.at("R")[1].get<double>() == t.rotation(0, 1));
    const RigidTransform back = transform_from_json(text);
    CHECK(max_abs(back.rotation - t.rotation) == 0.0);
    CHECK((back.translation - t.translation).norm() == 0.0);
    CHECK_THROWS_AS(transform_from_json("{\"R\": [1,2]}"), FormatError);
}
