#include <gtest/gtest.h>

#include "guides/access.hpp"
#include "guides/error.hpp"

using namespace guides;

namespace {

// Expected grant table, written out by hand.
bool expected_grant(Role r, Capability c) {
    switch (r) {
        case Role::admin: return true;
        case Role::crew: return true;
        case Role::planner: return c == Capability::read_public || c == Capability::read_sensitive;
        case Role::public_: return c == Capability::read_public;
    }
    return false;
}

Layer layer_of(Sensitivity s) {
    Layer l;
    l.id = "L";
    l.kind = LayerKind::pipes;
    l.sensitivity = s;
    return l;
}

}  // namespace

TEST(Access, ExhaustiveTable) {
    const auto policy = AccessPolicy::standard();
    for (Role r : kAllRoles) {
        for (Capability c : kAllCapabilities) {
            for (Sensitivity s : {Sensitivity::public_, Sensitivity::sensitive}) {
                const bool want = expected_grant(r, c) && (s == Sensitivity::public_ || expected_grant(r, Capability::read_sensitive));
                const auto d = authorize(policy, r, c, layer_of(s));
                EXPECT_EQ(d.allowed, want) << to_string(r) << " " << to_string(c) << " " << to_string(s);
                if (!d.allowed) {
                    EXPECT_FALSE(d.reason.empty());
                }
            }
        }
    }
}

TEST(Access, Reasons) {
    const auto policy = AccessPolicy::standard();
    EXPECT_EQ(authorize(policy, Role::planner, Capability::resolve_flags, layer_of(Sensitivity::public_)).reason, "no_grant");
    EXPECT_EQ(authorize(policy, Role::public_, Capability::read_public, layer_of(Sensitivity::sensitive)).reason,
              "sensitive_layer");
    EXPECT_TRUE(authorize(policy, Role::public_, Capability::read_public, layer_of(Sensitivity::public_)).allowed);
}

TEST(Access, PublicCannotHoldMore) {
    auto policy = AccessPolicy::standard();
    EXPECT_THROW(policy.set_grants(Role::public_, {{Capability::read_sensitive}}), ValidationError);
    EXPECT_EQ(policy.grants(Role::public_).size(), 1u);
    EXPECT_THROW(AccessPolicy::from_json({{"public", {"update"}}}), ValidationError);
}

TEST(Access, LayerKindScopedGrant) {
    auto policy = AccessPolicy::from_json({{"planner", {"read_public", {{"capability", "update"}, {"layer_kind", "streets"}}}}});
    Layer streets = layer_of(Sensitivity::public_);
    streets.kind = LayerKind::streets;
    EXPECT_TRUE(authorize(policy, Role::planner, Capability::update, streets).allowed);
    EXPECT_FALSE(authorize(policy, Role::planner, Capability::update, layer_of(Sensitivity::public_)).allowed);
}

TEST(Access, JsonRoundTrip) {
    const auto policy = AccessPolicy::standard();
    const auto back = AccessPolicy::from_json(policy.to_json());
    EXPECT_EQ(back.to_json(), policy.to_json());
    EXPECT_THROW(role_from_string("resident"), ArgumentError);
    EXPECT_THROW(capability_from_string("delete"), ArgumentError);
}
