#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "guides/model.hpp"

namespace guides {

enum class Role { admin, planner, crew, public_ };
enum class Capability { read_public, read_sensitive, update, resolve_flags };

std::string to_string(Role r);
std::string to_string(Capability c);
Role role_from_string(std::string_view s);
Capability capability_from_string(std::string_view s);

inline constexpr Role kAllRoles[] = {Role::admin, Role::planner, Role::crew, Role::public_};
inline constexpr Capability kAllCapabilities[] = {Capability::read_public, Capability::read_sensitive, Capability::update,
                                                  Capability::resolve_flags};

struct Grant {
    Capability capability;
    std::string layer_kind = "*";  // a LayerKind name or "*"

    friend bool operator==(const Grant&, const Grant&) = default;
};

struct AccessDecision {
    bool allowed = false;
    std::string reason;  // empty when allowed; "no_grant" or "sensitive_layer"
};

class AccessPolicy {
public:
    /// admin: everything; crew: read both, update, resolve_flags;
    /// planner: read both; public: read_public only.
    static AccessPolicy standard();
    static AccessPolicy from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    void set_grants(Role role, std::vector<Grant> grants);
    const std::vector<Grant>& grants(Role role) const;
    bool has_grant(Role role, Capability cap, LayerKind kind) const;

private:
    void validate() const;

    std::map<Role, std::vector<Grant>> grants_;
};

/// Pure function of (role, capability, layer kind and sensitivity). Any
/// access to a sensitive layer additionally needs read_sensitive.
AccessDecision authorize(const AccessPolicy& policy, Role role, Capability cap, const Layer& layer);

}  // namespace guides
