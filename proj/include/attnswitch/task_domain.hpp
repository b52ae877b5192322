#pragma once

// Kit-fulfillment planning domain: a worker moves containers between storage
// and a single unloading platform and places items into a kit box.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "attnswitch/error.hpp"

namespace attnswitch {

using json = nlohmann::json;

struct Container {
    std::string id;
    std::map<std::string, int> contents;
};

/// Validated instance. Item types are indexed in lexicographic order of their
/// names, containers in document order.
class KitInstance {
public:
    KitInstance(std::vector<Container> containers, std::map<std::string, int> requirement,
                std::string notes = {});

    const std::vector<Container>& containers() const noexcept { return containers_; }
    const std::map<std::string, int>& requirement() const noexcept { return requirement_; }
    const std::string& notes() const noexcept { return notes_; }

    std::size_t container_count() const noexcept { return containers_.size(); }
    std::size_t item_count() const noexcept { return item_names_.size(); }
    const std::string& item_name(std::size_t i) const { return item_names_.at(i); }
    /// Required count per item index.
    int required(std::size_t i) const { return required_.at(i); }
    /// Index of the unique container holding item i.
    std::size_t source(std::size_t i) const { return source_.at(i); }

    std::optional<std::size_t> find_container(const std::string& id) const;
    std::optional<std::size_t> find_item(const std::string& name) const;

private:
    std::vector<Container> containers_;
    std::map<std::string, int> requirement_;
    std::string notes_;
    std::vector<std::string> item_names_;
    std::vector<int> required_;
    std::vector<std::size_t> source_;
};

struct KitState {
    std::optional<std::size_t> platform;  // container index, or empty
    std::vector<int> placed;               // per item index

    friend bool operator==(const KitState&, const KitState&) = default;
    /// Canonical order: platform (Empty first, then by container), then placed counts.
    friend bool operator<(const KitState& a, const KitState& b) {
        auto code = [](const KitState& s) { return s.platform ? static_cast<long>(*s.platform) : -1L; };
        if (code(a) != code(b)) return code(a) < code(b);
        return a.placed < b.placed;
    }
};

struct HumanAction {
    enum class Kind : std::uint8_t { Fetch, Place, Stow };
    Kind kind;
    std::size_t target;  // container index for Fetch/Stow, item index for Place

    friend bool operator==(const HumanAction&, const HumanAction&) = default;
    friend auto operator<=>(const HumanAction&, const HumanAction&) = default;

    static HumanAction fetch(std::size_t c) { return {Kind::Fetch, c}; }
    static HumanAction place(std::size_t i) { return {Kind::Place, i}; }
    static HumanAction stow(std::size_t c) { return {Kind::Stow, c}; }
};

std::string to_string(const KitInstance& inst, const HumanAction& a);

// ---------------------------------------------------------------------------
// Instance document

KitInstance parse_instance(const std::string& text);
KitInstance instance_from_json(const json& doc);
json instance_to_json(const KitInstance& inst);
std::string serialize_instance(const KitInstance& inst);
/// FNV-1a over the canonical serialization; keys cache files.
std::uint64_t instance_hash(const KitInstance& inst);

/// The two-container reference instance (optimal plan of 10 human actions).
inline constexpr const char* kCanonicalInstance =
    R"({"containers": [{"id": "C1", "contents": {"bolt": 2, "nut": 2}}, )"
    R"({"id": "C2", "contents": {"washer": 2, "gear": 2}}], )"
    R"("requirement": {"bolt": 2, "nut": 1, "washer": 2, "gear": 1}})";

// ---------------------------------------------------------------------------
// Dynamics

KitState initial_state(const KitInstance& inst);
bool is_valid(const KitInstance& inst, const KitState& x);
bool is_terminal(const KitInstance& inst, const KitState& x);
/// Legal actions in deterministic order: Fetch by container, Place by item, Stow.
std::vector<HumanAction> legal_actions(const KitInstance& inst, const KitState& x);
bool is_legal(const KitInstance& inst, const KitState& x, const HumanAction& a);
KitState transition(const KitInstance& inst, const KitState& x, const HumanAction& a);

/// Every action that can ever be legal on this instance, in the same order
/// legal_actions uses. Indexes the robot's Suggest actions.
std::vector<HumanAction> all_actions(const KitInstance& inst);

// ---------------------------------------------------------------------------
// Reachable state space

inline constexpr std::size_t kDefaultStateCap = 1'000'000;

struct Edge {
    HumanAction action;
    std::size_t next;
};

/// Reachable states with dense indices, plus the successor list of each state
/// (aligned with legal_actions order).
class StateSpace {
public:
    explicit StateSpace(KitInstance inst, std::size_t cap = kDefaultStateCap);

    const KitInstance& instance() const noexcept { return inst_; }
    std::size_t size() const noexcept { return states_.size(); }
    const KitState& state(std::size_t s) const { return states_.at(s); }
    const std::vector<KitState>& states() const noexcept { return states_; }
    std::span<const Edge> edges(std::size_t s) const { return edges_.at(s); }
    bool terminal(std::size_t s) const { return terminal_.at(s); }
    std::size_t initial() const noexcept { return initial_; }
    std::size_t index_of(const KitState& x) const;
    std::optional<std::size_t> find(const KitState& x) const;
    /// Position of `a` within edges(s), if legal.
    std::optional<std::size_t> edge_index(std::size_t s, const HumanAction& a) const;

private:
    std::uint64_t key(const KitState& x) const;

    KitInstance inst_;
    std::vector<KitState> states_;
    std::vector<std::vector<Edge>> edges_;
    std::vector<bool> terminal_;
    std::unordered_map<std::uint64_t, std::size_t> index_;
    std::size_t initial_ = 0;
};

inline StateSpace enumerate_states(const KitInstance& inst, std::size_t cap = kDefaultStateCap) {
    return StateSpace(inst, cap);
}

// ===========================================================================
// Implementation

inline KitInstance::KitInstance(std::vector<Container> containers,
                                std::map<std::string, int> requirement, std::string notes)
    : containers_(std::move(containers)), requirement_(std::move(requirement)), notes_(std::move(notes)) {
    if (containers_.empty()) throw SemanticError("instance must have at least one container");
    std::map<std::string, std::size_t> seen_ids;
    std::map<std::string, std::size_t> holder;
    for (std::size_t c = 0; c < containers_.size(); ++c) {
        const auto& box = containers_[c];
        if (box.id.empty()) throw SemanticError("container " + std::to_string(c) + " has an empty id");
        if (!seen_ids.emplace(box.id, c).second)
            throw SemanticError("duplicate container id '" + box.id + "'");
        for (const auto& [item, count] : box.contents) {
            if (count < 0)
                throw SemanticError("container '" + box.id + "' has negative count for '" + item + "'");
            if (count == 0) continue;
            auto [it, fresh] = holder.emplace(item, c);
            if (!fresh)
                throw SemanticError("item '" + item + "' is held by both '" + containers_[it->second].id +
                                    "' and '" + box.id + "'; each item type must come from one container");
        }
    }
    for (const auto& [item, count] : requirement_) {
        if (count < 0) throw SemanticError("requirement for '" + item + "' is negative");
        if (count == 0) continue;
        auto it = holder.find(item);
        if (it == holder.end())
            throw SemanticError("required item '" + item + "' is not held by any container");
        const int available = containers_[it->second].contents.at(item);
        if (available < count)
            throw SemanticError("required item '" + item + "' needs " + std::to_string(count) + " but '" +
                                containers_[it->second].id + "' holds only " + std::to_string(available));
        item_names_.push_back(item);
        required_.push_back(count);
        source_.push_back(it->second);
    }
}

inline std::optional<std::size_t> KitInstance::find_container(const std::string& id) const {
    for (std::size_t c = 0; c < containers_.size(); ++c)
        if (containers_[c].id == id) return c;
    return std::nullopt;
}

inline std::optional<std::size_t> KitInstance::find_item(const std::string& name) const {
    auto it = std::lower_bound(item_names_.begin(), item_names_.end(), name);
    if (it == item_names_.end() || *it != name) return std::nullopt;
    return static_cast<std::size_t>(it - item_names_.begin());
}

inline std::string to_string(const KitInstance& inst, const HumanAction& a) {
    switch (a.kind) {
        case HumanAction::Kind::Fetch: return "Fetch(" + inst.containers().at(a.target).id + ")";
        case HumanAction::Kind::Stow: return "Stow(" + inst.containers().at(a.target).id + ")";
        case HumanAction::Kind::Place: return "Place(" + inst.item_name(a.target) + ")";
    }
    return "?";
}

namespace detail {

inline int expect_count(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ParseError(path + ": expected an integer count");
    const auto n = v.get<long long>();
    if (n < 0) throw SemanticError(path + ": count must be >= 0");
    if (n > 1'000'000) throw SemanticError(path + ": count too large");
    return static_cast<int>(n);
}

inline std::map<std::string, int> count_map(const json& v, const std::string& path) {
    if (!v.is_object()) throw ParseError(path + ": expected an object of item counts");
    std::map<std::string, int> out;
    for (const auto& [k, n] : v.items()) out[k] = expect_count(n, path + "/" + k);
    return out;
}

}  // namespace detail

inline KitInstance instance_from_json(const json& doc) {
    if (!doc.is_object()) throw ParseError("/: expected a JSON object");
    if (!doc.contains("containers")) throw ParseError("/containers: missing");
    if (!doc.contains("requirement")) throw ParseError("/requirement: missing");
    const auto& list = doc["containers"];
    if (!list.is_array()) throw ParseError("/containers: expected an array");
    std::vector<Container> containers;
    for (std::size_t c = 0; c < list.size(); ++c) {
        const std::string path = "/containers/" + std::to_string(c);
        const auto& entry = list[c];
        if (!entry.is_object()) throw ParseError(path + ": expected an object");
        if (!entry.contains("id") || !entry["id"].is_string()) throw ParseError(path + "/id: expected a string");
        if (!entry.contains("contents")) throw ParseError(path + "/contents: missing");
        containers.push_back({entry["id"].get<std::string>(), detail::count_map(entry["contents"], path + "/contents")});
    }
    auto requirement = detail::count_map(doc["requirement"], "/requirement");
    std::string notes;
    if (doc.contains("notes")) {
        if (!doc["notes"].is_string()) throw ParseError("/notes: expected a string");
        notes = doc["notes"].get<std::string>();
    }
    return KitInstance(std::move(containers), std::move(requirement), std::move(notes));
}

inline KitInstance parse_instance(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("instance document: ") + e.what());
    }
    return instance_from_json(doc);
}

inline json instance_to_json(const KitInstance& inst) {
    json doc;
    doc["containers"] = json::array();
    for (const auto& box : inst.containers()) {
        json contents = json::object();
        for (const auto& [k, n] : box.contents) contents[k] = n;
        doc["containers"].push_back({{"id", box.id}, {"contents", contents}});
    }
    json req = json::object();
    for (const auto& [k, n] : inst.requirement()) req[k] = n;
    doc["requirement"] = req;
    if (!inst.notes().empty()) doc["notes"] = inst.notes();
    return doc;
}

inline std::string serialize_instance(const KitInstance& inst) { return instance_to_json(inst).dump(); }

inline std::uint64_t instance_hash(const KitInstance& inst) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : serialize_instance(inst)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline KitState initial_state(const KitInstance& inst) {
    return KitState{std::nullopt, std::vector<int>(inst.item_count(), 0)};
}

inline bool is_valid(const KitInstance& inst, const KitState& x) {
    if (x.placed.size() != inst.item_count()) return false;
    if (x.platform && *x.platform >= inst.container_count()) return false;
    for (std::size_t i = 0; i < inst.item_count(); ++i)
        if (x.placed[i] < 0 || x.placed[i] > inst.required(i)) return false;
    return true;
}

inline bool is_terminal(const KitInstance& inst, const KitState& x) {
    if (x.platform) return false;
    for (std::size_t i = 0; i < inst.item_count(); ++i)
        if (x.placed[i] != inst.required(i)) return false;
    return true;
}

inline std::vector<HumanAction> all_actions(const KitInstance& inst) {
    std::vector<HumanAction> out;
    for (std::size_t c = 0; c < inst.container_count(); ++c) out.push_back(HumanAction::fetch(c));
    for (std::size_t i = 0; i < inst.item_count(); ++i) out.push_back(HumanAction::place(i));
    for (std::size_t c = 0; c < inst.container_count(); ++c) out.push_back(HumanAction::stow(c));
    return out;
}

inline bool is_legal(const KitInstance& inst, const KitState& x, const HumanAction& a) {
    if (is_terminal(inst, x)) return false;
    switch (a.kind) {
        case HumanAction::Kind::Fetch: return !x.platform && a.target < inst.container_count();
        case HumanAction::Kind::Stow: return x.platform && *x.platform == a.target;
        case HumanAction::Kind::Place: {
            if (!x.platform || a.target >= inst.item_count()) return false;
            if (inst.source(a.target) != *x.platform) return false;
            const int held = inst.containers()[*x.platform].contents.at(inst.item_name(a.target));
            return x.placed[a.target] < inst.required(a.target) && x.placed[a.target] < held;
        }
    }
    return false;
}

inline std::vector<HumanAction> legal_actions(const KitInstance& inst, const KitState& x) {
    std::vector<HumanAction> out;
    for (const auto& a : all_actions(inst))
        if (is_legal(inst, x, a)) out.push_back(a);
    return out;
}

inline KitState transition(const KitInstance& inst, const KitState& x, const HumanAction& a) {
    if (!is_legal(inst, x, a)) throw ContractViolation("illegal action " + to_string(inst, a));
    KitState next = x;
    switch (a.kind) {
        case HumanAction::Kind::Fetch: next.platform = a.target; break;
        case HumanAction::Kind::Stow: next.platform.reset(); break;
        case HumanAction::Kind::Place: ++next.placed[a.target]; break;
    }
    return next;
}

inline std::uint64_t StateSpace::key(const KitState& x) const {
    std::uint64_t k = x.platform ? *x.platform + 1 : 0;
    std::uint64_t radix = inst_.container_count() + 1;
    for (std::size_t i = 0; i < x.placed.size(); ++i) {
        k += radix * static_cast<std::uint64_t>(x.placed[i]);
        radix *= static_cast<std::uint64_t>(inst_.required(i)) + 1;
    }
    return k;
}

inline StateSpace::StateSpace(KitInstance instance, std::size_t cap) : inst_(std::move(instance)) {
    const KitInstance& inst = inst_;
    // Breadth-first discovery, then re-index in canonical order.
    std::vector<KitState> found{initial_state(inst)};
    std::unordered_map<std::uint64_t, std::size_t> seen{{key(found[0]), 0}};
    for (std::size_t head = 0; head < found.size(); ++head) {
        const KitState x = found[head];
        for (const auto& a : legal_actions(inst, x)) {
            KitState y = transition(inst, x, a);
            if (seen.emplace(key(y), found.size()).second) {
                if (found.size() >= cap)
                    throw CapacityError("state space exceeds cap of " + std::to_string(cap) + " states");
                found.push_back(std::move(y));
            }
        }
    }
    std::sort(found.begin(), found.end());
    states_ = std::move(found);
    for (std::size_t s = 0; s < states_.size(); ++s) index_.emplace(key(states_[s]), s);
    edges_.resize(states_.size());
    terminal_.resize(states_.size());
    for (std::size_t s = 0; s < states_.size(); ++s) {
        terminal_[s] = is_terminal(inst, states_[s]);
        for (const auto& a : legal_actions(inst, states_[s]))
            edges_[s].push_back({a, index_.at(key(transition(inst, states_[s], a)))});
    }
    initial_ = index_.at(key(initial_state(inst)));
}

inline std::optional<std::size_t> StateSpace::find(const KitState& x) const {
    if (!is_valid(inst_, x)) return std::nullopt;
    auto it = index_.find(key(x));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

inline std::size_t StateSpace::index_of(const KitState& x) const {
    auto s = find(x);
    if (!s) throw ContractViolation("state is not in the enumerated state space");
    return *s;
}

inline std::optional<std::size_t> StateSpace::edge_index(std::size_t s, const HumanAction& a) const {
    const auto& list = edges_.at(s);
    for (std::size_t e = 0; e < list.size(); ++e)
        if (list[e].action == a) return e;
    return std::nullopt;
}

}  // namespace attnswitch
