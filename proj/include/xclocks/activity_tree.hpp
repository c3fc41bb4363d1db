#pragma once

// Activity trees and evaluation contexts, shared by the set-based and the
// counter-based clock backends. Only the clock view type differs.

#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "xclocks/syntax.hpp"

namespace xclocks {

using Path = std::vector<Name>;

std::string format_path(std::span<const Name> path);

template <class View>
struct BasicActivity {
  View view;
  ExprPtr expr;
  std::map<Name, BasicActivity> children;
};

template <class View>
using BasicActivitySet = std::map<Name, BasicActivity<View>>;

/// Evaluation contexts are  E ::= [] | let x = E in e.  The redex site is
/// either a `let x = v in e` (let-val) or the non-value expression in the
/// hole. Returns nullptr for values.
inline const Expr* redex_site(const Expr& e) {
  if (auto* let = e.as<LetExpr>()) {
    return is_value(*let->bound) ? &e : redex_site(*let->bound);
  }
  return is_value(e) ? nullptr : &e;
}

/// Replaces the redex site of `e` with `f(site)`.
template <class F>
ExprPtr plug(const ExprPtr& e, F&& f) {
  if (auto* let = e->as<LetExpr>(); let != nullptr && !is_value(*let->bound)) {
    return std::make_shared<const Expr>(
        Expr{LetExpr{let->var, plug(let->bound, f), let->body}, e->begin, e->end});
  }
  return f(e);
}

/// Spawned bodies run as `let x# = e in x#` so every redex sits in the
/// bound position of some let, as the state rules require.
inline ExprPtr wrap_body(const ExprPtr& body, const Name& binder) {
  if (is_value(*body)) return body;
  return make_let(binder, body, make_val(Value::var(binder)));
}

/// The activity whose `join` is waiting on a finish body, viewed from that
/// body's root activity. Chains through nested finishes.
template <class View>
struct FinishOwner {
  Name label;
  const BasicActivity<View>* activity;
  const FinishOwner* outer;
};

/// Label of the finish-body child `a` is waiting on, if its redex is a join.
template <class View>
const Name* pending_join(const BasicActivity<View>& a) {
  const Expr* site = redex_site(*a.expr);
  if (site == nullptr) return nullptr;
  auto* join = site->as<JoinExpr>();
  return join != nullptr ? &join->label : nullptr;
}

/// Visits the descendants of `act` (whose own owner is `owner`) in
/// pre-order; `path` must end with the label of `act`.
template <class View, class F>
void walk_nested(const BasicActivity<View>& act, F& fn, Path& path,
                 const FinishOwner<View>* owner) {
  const Name* joined = pending_join(act);
  for (const auto& [child_label, child] : act.children) {
    FinishOwner<View> here{path.back(), &act, owner};
    bool is_body = joined != nullptr && *joined == child_label;
    path.push_back(child_label);
    fn(static_cast<const Path&>(path), child, is_body ? &here : nullptr);
    if (!child.children.empty()) walk_nested(child, fn, path, is_body ? &here : nullptr);
    path.pop_back();
  }
}

/// Pre-order walk in label order. `fn(path, activity, owner)` where `owner`
/// is non-null for the root activity of a pending finish body.
template <class View, class F>
void for_each_activity(const BasicActivitySet<View>& set, F&& fn) {
  Path path;
  for (const auto& [label, act] : set) {
    path.push_back(label);
    fn(static_cast<const Path&>(path), act, static_cast<const FinishOwner<View>*>(nullptr));
    if (!act.children.empty()) walk_nested<View>(act, fn, path, nullptr);
    path.pop_back();
  }
}

/// The set holding the activity at `path` (its siblings included).
template <class View>
BasicActivitySet<View>* sibling_set(BasicActivitySet<View>& top, std::span<const Name> path) {
  BasicActivitySet<View>* set = &top;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    auto it = set->find(path[i]);
    if (it == set->end()) return nullptr;
    set = &it->second.children;
  }
  return set;
}

template <class View>
BasicActivity<View>* find_activity(BasicActivitySet<View>& top, std::span<const Name> path) {
  if (path.empty()) return nullptr;
  auto* set = sibling_set(top, path);
  if (set == nullptr) return nullptr;
  auto it = set->find(path.back());
  return it == set->end() ? nullptr : &it->second;
}

template <class View>
const BasicActivity<View>* find_activity(const BasicActivitySet<View>& top,
                                         std::span<const Name> path) {
  return find_activity(const_cast<BasicActivitySet<View>&>(top), path);
}

/// Owner chain for the activity at `path`, rebuilt into `storage`
/// (outermost first). Returns the innermost owner or nullptr.
template <class View>
const FinishOwner<View>* owner_chain(const BasicActivitySet<View>& top,
                                     std::span<const Name> path,
                                     std::vector<FinishOwner<View>>& storage) {
  storage.clear();
  storage.reserve(path.size());
  const BasicActivitySet<View>* set = &top;
  const FinishOwner<View>* owner = nullptr;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    auto it = set->find(path[i]);
    if (it == set->end()) return nullptr;
    const auto& parent = it->second;
    const Name* joined = pending_join(parent);
    bool is_body = joined != nullptr && *joined == path[i + 1];
    if (is_body) {
      storage.push_back(FinishOwner<View>{path[i], &parent, owner});
      owner = &storage.back();
    } else {
      owner = nullptr;
    }
    set = &parent.children;
  }
  return owner;
}

/// True when every top-level activity is a value with an empty view and no
/// children.
template <class View>
bool all_terminated(const BasicActivitySet<View>& set) {
  for (const auto& [_, a] : set) {
    if (!is_value(*a.expr) || !a.view.empty() || !a.children.empty()) return false;
  }
  return true;
}

}  // namespace xclocks
