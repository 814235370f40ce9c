#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "abn/data.hpp"
#include "abn/error.hpp"

using namespace abn;

namespace {

std::string kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return "";
}

DistSpec spec3() { return DistSpec::parse("sex=binomial\ncount=poisson\nw=gaussian\n"); }

}  // namespace

TEST_CASE("dist spec parsing") {
    auto s = DistSpec::parse("# comment\n a = binomial \nb=gaussian # trailing\ngroup_var=farm\n");
    REQUIRE(s.columns.size() == 2);
    CHECK(s.columns[0].first == "a");
    CHECK(s.columns[1].second == Distribution::gaussian);
    CHECK(s.group_var == std::optional<std::string>("farm"));
    CHECK(kind_of([] { DistSpec::parse("a=multinomial"); }) == "UnknownDistribution");
}

TEST_CASE("load and code binary levels") {
    Dataset ds = load_dataset_text("sex,count,w\nm,1,2.5\nf,0,1.5\nm,3,0.5\n", spec3());
    CHECK(ds.n_obs() == 3);
    CHECK(ds.column(0)[0] == 1.0);  // "f" < "m" so f -> 0
    CHECK(ds.column(0)[1] == 0.0);
    CHECK(ds.levels().at("sex") == std::pair<std::string, std::string>("f", "m"));
    Dataset num = load_dataset_text("sex,count,w\n2,1,2.5\n10,0,1.5\n", spec3());
    CHECK(num.column(0)[0] == 0.0);  // numeric levels: 2 < 10
}

TEST_CASE("load errors") {
    CHECK(kind_of([&] { load_dataset_text("sex,count,w\na,1,2\nb,1,2\nc,1,2\n", spec3()); }) == "BadLevelCount");
    CHECK(kind_of([&] { load_dataset_text("sex,count,w\na,-1,2\nb,1,2\n", spec3()); }) == "NegativeCount");
    CHECK(kind_of([&] { load_dataset_text("sex,count,w\na,NA,2\nb,1,2\n", spec3()); }) == "MissingValue");
    CHECK(kind_of([&] { load_dataset_text("sex,count,w\na,,2\nb,1,2\n", spec3()); }) == "MissingValue");
    CHECK(kind_of([&] { load_dataset_text("sex,count\na,1\nb,1\n", spec3()); }) == "MissingColumn");
    CHECK(kind_of([&] { load_dataset_text("sex,count,w,z\na,1,2,0\nb,1,2,0\n", spec3()); }) == "UnspecifiedColumn");
    CHECK(kind_of([&] { load_dataset_text("sex,count,w\na,1.5,2\nb,1,2\n", spec3()); }) == "NonIntegerCount");
}

TEST_CASE("group column is carried as metadata") {
    auto s = DistSpec::parse("a=binomial\nx=gaussian\ngroup_var=farm\n");
    Dataset ds = load_dataset_text("a,x,farm\n0,1,f1\n1,2,f2\n", s);
    CHECK(ds.n_vars() == 2);
    CHECK(ds.group() == std::vector<std::string>{"f1", "f2"});
}

TEST_CASE("fingerprint tracks bytes and spec") {
    std::string text = "sex,count,w\nm,1,2.5\nf,0,1.5\n";
    auto a = load_dataset_text(text, spec3()).fingerprint();
    CHECK(a == load_dataset_text(text, spec3()).fingerprint());
    CHECK(a != load_dataset_text("sex,count,w\nm,1,2.5\nf,0,1.25\n", spec3()).fingerprint());
    CHECK(a != load_dataset_text(text, DistSpec::parse("sex=binomial\ncount=gaussian\nw=gaussian\n")).fingerprint());
}

TEST_CASE("standardize") {
    Dataset ds = load_dataset_text("sex,count,w\nm,1,1\nf,0,2\nm,3,3\n", spec3());
    Dataset z = standardize(ds);
    CHECK(std::abs(z.column(2).mean()) < 1e-12);
    double sd = std::sqrt((z.column(2).array() - z.column(2).mean()).square().sum() / 2.0);
    CHECK(std::abs(sd - 1.0) < 1e-12);
    CHECK(z.column(0) == ds.column(0));
    CHECK(z.column(1) == ds.column(1));
    REQUIRE(z.transforms()[2]);
    CHECK(z.transforms()[2]->mean == doctest::Approx(2.0));
    CHECK(kind_of([&] { standardize(load_dataset_text("sex,count,w\nm,1,1\nf,0,1\n", spec3())); }) == "ZeroVariance");
}

TEST_CASE("standardized moments on random columns") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd(50.0, 7.0);
    for (int t = 0; t < 50; ++t) {
        Eigen::VectorXd x(200);
        for (auto& v : x) v = nd(rng);
        Dataset ds({"x"}, {Distribution::gaussian}, {x});
        Dataset z = standardize(ds);
        const auto& c = z.column(0);
        REQUIRE(std::abs(c.mean()) < 1e-12);
        double sd = std::sqrt((c.array() - c.mean()).square().sum() / 199.0);
        REQUIRE(std::abs(sd - 1.0) < 1e-12);
    }
}

TEST_CASE("design matrices") {
    Dataset ds = load_dataset_text("sex,count,w\nm,1,1\nf,0,2\nm,3,3\n", spec3());
    auto d0 = build_design(ds, "w", {});
    CHECK(d0.predictors.cols() == 1);
    CHECK(d0.labels == std::vector<std::string>{"(Intercept)"});
    auto d = build_design(ds, "w", {"sex", "count"});
    CHECK(d.labels == std::vector<std::string>{"(Intercept)", "count", "sex"});
    CHECK(d.predictors(2, 1) == 3.0);
    CHECK(d.response == ds.column(2));
    CHECK(kind_of([&] { build_design(ds, "w", {"w"}); }) == "SelfParent");
    CHECK(kind_of([&] { build_design(ds, "w", {"sex", "sex"}); }) == "DuplicateParent");
    CHECK(kind_of([&] { build_design(ds, "w", {"zz"}); }) == "UnknownName");
    auto by_mask = build_design(ds, 2, 0b011);
    CHECK(by_mask.predictors == d.predictors);
}

TEST_CASE("write and reload round trip") {
    Dataset ds = load_dataset_text("sex,count,w\nm,1,0.1\nf,0,2.7182818284590451\nm,3,3\n", spec3());
    std::ostringstream os;
    write_dataset(os, ds);
    Dataset back = load_dataset_text(os.str(), spec3());
    for (std::size_t j = 0; j < 3; ++j) CHECK(back.column(j) == ds.column(j));
}
