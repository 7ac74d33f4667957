#include <doctest.h>

#include "mlaqp/schema.hpp"

using namespace mlaqp;

namespace {

DatasetSchema three_attr_schema() {
    DatasetSchema s;
    s.name = "B";
    s.attributes = {{"a1", AttrKind::numeric, {}},
                    {"a2", AttrKind::numeric, {}},
                    {"a3", AttrKind::numeric, {}}};
    return s;
}

} // namespace

TEST_SUITE("schema") {

TEST_CASE("aggregate key round-trips through its string form") {
    for (AggFn fn : {AggFn::count, AggFn::sum, AggFn::avg, AggFn::min, AggFn::max}) {
        AggregateSpec spec{fn, fn == AggFn::count ? std::optional<std::string>{} : "a3"};
        auto back = aggregate_spec_from_key(spec.key());
        REQUIRE(back.has_value());
        CHECK(*back == spec);
    }
    CHECK(AggregateSpec{AggFn::avg, "a3"}.key() == "AVG(a3)");
    CHECK(AggregateSpec{AggFn::count, {}}.key() == "COUNT(*)");
    CHECK_FALSE(aggregate_spec_from_key("MEDIAN(a1)").has_value());
    CHECK_FALSE(aggregate_spec_from_key("AVG").has_value());
}

TEST_CASE("schema validate rejects duplicates and misplaced cardinality") {
    DatasetSchema s = three_attr_schema();
    CHECK_NOTHROW(s.validate());

    DatasetSchema dup = s;
    dup.attributes.push_back({"a1", AttrKind::numeric, {}});
    CHECK_THROWS_AS(dup.validate(), error);

    DatasetSchema numeric_card = s;
    numeric_card.attributes[0].cardinality = 5;
    CHECK_THROWS_AS(numeric_card.validate(), error);

    DatasetSchema cat_missing_card = s;
    cat_missing_card.attributes[0].kind = AttrKind::categorical;
    cat_missing_card.attributes[0].cardinality.reset();
    CHECK_THROWS_AS(cat_missing_card.validate(), error);

    DatasetSchema empty;
    empty.name = "e";
    CHECK_THROWS_AS(empty.validate(), error);
}

TEST_CASE("index_of finds attributes by name") {
    DatasetSchema s = three_attr_schema();
    CHECK(s.index_of("a2") == 1);
    CHECK_FALSE(s.index_of("nope").has_value());
}

TEST_CASE("meta-vector equality treats missing slots as equal, zero as a real bound") {
    MetaVector a(4), b(4);
    CHECK(a == b); // all-missing vectors compare equal despite NaN slots
    a.values[0] = 0.0;
    CHECK_FALSE(a == b); // zero is a legal bound, distinct from missing
    b.values[0] = 0.0;
    CHECK(a == b);
    CHECK(a.present(0));
    CHECK_FALSE(a.present(1));
    CHECK(a.present_count() == 1);
}

TEST_CASE("validate_pair flags width, bound order and non-finite answers") {
    MetaVector m(4);
    m.values[0] = 1.0;
    m.values[1] = 2.0;
    QueryAnswerPair ok{m, {AggFn::count, {}}, 10.0};
    CHECK(validate_pair(ok, 4) == PairError::ok);
    CHECK(validate_pair(ok, 6) == PairError::length_mismatch);

    QueryAnswerPair inverted = ok;
    inverted.meta.values[0] = 3.0; // lb > ub
    CHECK(validate_pair(inverted, 4) == PairError::inverted_bounds);

    QueryAnswerPair equality = ok;
    equality.meta.values[0] = 2.0; // lb == ub is a legal equality predicate
    CHECK(validate_pair(equality, 4) == PairError::ok);

    QueryAnswerPair nan_answer = ok;
    nan_answer.answer = missing_value();
    CHECK(validate_pair(nan_answer, 4) == PairError::non_finite_answer);

    // a one-sided predicate leaves the partner slot missing and is still valid
    QueryAnswerPair one_sided = ok;
    one_sided.meta.values[1] = missing_value();
    CHECK(validate_pair(one_sided, 4) == PairError::ok);
}

} // TEST_SUITE
