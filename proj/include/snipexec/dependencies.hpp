#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "snipexec/model.hpp"

namespace snipexec {

struct DependencyPlan {
  std::set<std::string> import_names;      // top-level modules imported by the prefix
  std::set<std::string> package_names;     // third-party packages they map to
  std::set<std::string> already_installed;  // subset of package_names present in the environment
  std::set<std::string> to_install;         // package_names minus already_installed

  bool operator==(const DependencyPlan&) const = default;
};

/// Import name to package name. Keys may be dotted; the longest matching prefix wins.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(std::map<std::string, std::string> entries) : entries_(std::move(entries)) {}

  /// Reads "module<TAB>package" lines; '#' starts a comment. Throws ContractViolation
  /// when the file cannot be read or a line is malformed.
  static AliasTable load(const std::string& path);
  /// The table shipped in data/.
  static const AliasTable& bundled();

  /// Package for a module path, falling back to its top-level name.
  std::string package_for(const std::string& module) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::string> entries_;
};

bool is_stdlib_module(const std::string& top_level);

/// Module paths imported by one statement; empty when it does not parse or
/// is relative.
std::vector<std::string> imported_modules(const std::string& import_line);

/// Normalized names of distributions and top-level modules in the
/// environment's site-packages.
std::set<std::string> installed_packages(const std::string& env_dir);

/// Lowercase with runs of '-', '_' and '.' collapsed to '-'.
std::string normalize_package(const std::string& name);

DependencyPlan plan_dependencies(const Prefix& prefix, const std::string& env_dir,
                                 const AliasTable& aliases = AliasTable::bundled());

struct InstallReport {
  std::vector<std::string> installed;
  std::vector<std::string> failed;
  std::vector<std::string> cached;  // attempted before; not retried

  bool operator==(const InstallReport&) const = default;
};

/// Installs into a shared environment, at most one attempt per package for
/// the installer's lifetime. Calls are serialized across threads.
class Installer {
 public:
  /// Returns the installer's exit status for an argv.
  using Runner = std::function<int(const std::vector<std::string>& argv)>;

  explicit Installer(std::string env_dir, Runner runner = nullptr);

  /// Creates the environment when it holds no interpreter yet.
  void ensure_environment();
  InstallReport install(const DependencyPlan& plan);
  const std::string& env_dir() const { return env_dir_; }

 private:
  std::string env_dir_;
  Runner runner_;
  std::mutex mutex_;
  std::map<std::string, bool> attempted_;
};

}  // namespace snipexec
