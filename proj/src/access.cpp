#include "guides/access.hpp"

#include "guides/error.hpp"

namespace guides {

using nlohmann::json;

std::string to_string(Role r) {
    switch (r) {
        case Role::admin: return "admin";
        case Role::planner: return "planner";
        case Role::crew: return "crew";
        case Role::public_: return "public";
    }
    return "public";
}

std::string to_string(Capability c) {
    switch (c) {
        case Capability::read_public: return "read_public";
        case Capability::read_sensitive: return "read_sensitive";
        case Capability::update: return "update";
        case Capability::resolve_flags: return "resolve_flags";
    }
    return "read_public";
}

Role role_from_string(std::string_view s) {
    for (Role r : kAllRoles) {
        if (to_string(r) == s) return r;
    }
    throw ArgumentError("unknown role '" + std::string(s) + "'");
}

Capability capability_from_string(std::string_view s) {
    for (Capability c : kAllCapabilities) {
        if (to_string(c) == s) return c;
    }
    throw ArgumentError("unknown capability '" + std::string(s) + "'");
}

AccessPolicy AccessPolicy::standard() {
    AccessPolicy p;
    p.grants_[Role::admin] = {{Capability::read_public}, {Capability::read_sensitive}, {Capability::update},
                              {Capability::resolve_flags}};
    p.grants_[Role::planner] = {{Capability::read_public}, {Capability::read_sensitive}};
    p.grants_[Role::crew] = {{Capability::read_public}, {Capability::read_sensitive}, {Capability::update},
                             {Capability::resolve_flags}};
    p.grants_[Role::public_] = {{Capability::read_public}};
    return p;
}

void AccessPolicy::validate() const {
    auto it = grants_.find(Role::public_);
    if (it == grants_.end()) return;
    for (const auto& g : it->second) {
        if (g.capability != Capability::read_public) {
            throw ValidationError("role public may not hold " + to_string(g.capability));
        }
    }
}

void AccessPolicy::set_grants(Role role, std::vector<Grant> grants) {
    auto previous = grants_[role];
    grants_[role] = std::move(grants);
    try {
        validate();
    } catch (...) {
        grants_[role] = std::move(previous);
        throw;
    }
}

const std::vector<Grant>& AccessPolicy::grants(Role role) const {
    static const std::vector<Grant> none;
    auto it = grants_.find(role);
    return it == grants_.end() ? none : it->second;
}

bool AccessPolicy::has_grant(Role role, Capability cap, LayerKind kind) const {
    const std::string kind_name = to_string(kind);
    for (const auto& g : grants(role)) {
        if (g.capability == cap && (g.layer_kind == "*" || g.layer_kind == kind_name)) return true;
    }
    return false;
}

AccessPolicy AccessPolicy::from_json(const json& j) {
    AccessPolicy p;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const Role role = role_from_string(it.key());
        std::vector<Grant> grants;
        for (const auto& g : it.value()) {
            if (g.is_string()) {
                grants.push_back({capability_from_string(g.get<std::string>())});
            } else {
                grants.push_back({capability_from_string(g.at("capability").get<std::string>()),
                                  g.value("layer_kind", std::string("*"))});
            }
        }
        p.grants_[role] = std::move(grants);
    }
    p.validate();
    return p;
}

json AccessPolicy::to_json() const {
    json out = json::object();
    for (const auto& [role, grants] : grants_) {
        json list = json::array();
        for (const auto& g : grants) list.push_back({{"capability", to_string(g.capability)}, {"layer_kind", g.layer_kind}});
        out[to_string(role)] = list;
    }
    return out;
}

AccessDecision authorize(const AccessPolicy& policy, Role role, Capability cap, const Layer& layer) {
    if (!policy.has_grant(role, cap, layer.kind)) return {false, "no_grant"};
    if (layer.sensitivity == Sensitivity::sensitive && !policy.has_grant(role, Capability::read_sensitive, layer.kind)) {
        return {false, "sensitive_layer"};
    }
    return {true, ""};
}

}  // namespace guides
