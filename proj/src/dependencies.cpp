#include "snipexec/dependencies.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "snipexec/errors.hpp"
#include "snipexec/process.hpp"
#include "snipexec/python/parser.hpp"

#ifndef SNIPEXEC_DATA_DIR
#define SNIPEXEC_DATA_DIR "data"
#endif

namespace snipexec {

namespace fs = std::filesystem;

namespace {

// Standard-library top-level modules of the targeted interpreter (3.10).
const std::set<std::string>& stdlib_modules() {
  static const std::set<std::string> names = {
    "__future__", "_abc", "_aix_support", "_ast", "_asyncio", "_bisect", "_blake2",
    "_bootsubprocess", "_bz2", "_codecs", "_codecs_cn", "_codecs_hk", "_codecs_iso2022",
    "_codecs_jp", "_codecs_kr", "_codecs_tw", "_collections", "_collections_abc", "_compat_pickle",
    "_compression", "_contextvars", "_crypt", "_csv", "_ctypes", "_curses", "_curses_panel",
    "_datetime", "_dbm", "_decimal", "_elementtree", "_frozen_importlib",
    "_frozen_importlib_external", "_functools", "_gdbm", "_hashlib", "_heapq", "_imp", "_io",
    "_json", "_locale", "_lsprof", "_lzma", "_markupbase", "_md5", "_msi", "_multibytecodec",
    "_multiprocessing", "_opcode", "_operator", "_osx_support", "_overlapped", "_pickle",
    "_posixshmem", "_posixsubprocess", "_py_abc", "_pydecimal", "_pyio", "_queue", "_random",
    "_scproxy", "_sha1", "_sha256", "_sha3", "_sha512", "_signal", "_sitebuiltins", "_socket",
    "_sqlite3", "_sre", "_ssl", "_stat", "_statistics", "_string", "_strptime", "_struct",
    "_symtable", "_thread", "_threading_local", "_tkinter", "_tracemalloc", "_uuid", "_warnings",
    "_weakref", "_weakrefset", "_winapi", "_zoneinfo", "abc", "aifc", "antigravity", "argparse",
    "array", "ast", "asynchat", "asyncio", "asyncore", "atexit", "audioop", "base64", "bdb",
    "binascii", "binhex", "bisect", "builtins", "bz2", "cProfile", "calendar", "cgi", "cgitb",
    "chunk", "cmath", "cmd", "code", "codecs", "codeop", "collections", "colorsys", "compileall",
    "concurrent", "configparser", "contextlib", "contextvars", "copy", "copyreg", "crypt", "csv",
    "ctypes", "curses", "dataclasses", "datetime", "dbm", "decimal", "difflib", "dis", "distutils",
    "doctest", "email", "encodings", "ensurepip", "enum", "errno", "faulthandler", "fcntl",
    "filecmp", "fileinput", "fnmatch", "fractions", "ftplib", "functools", "gc", "genericpath",
    "getopt", "getpass", "gettext", "glob", "graphlib", "grp", "gzip", "hashlib", "heapq", "hmac",
    "html", "http", "idlelib", "imaplib", "imghdr", "imp", "importlib", "inspect", "io",
    "ipaddress", "itertools", "json", "keyword", "lib2to3", "linecache", "locale", "logging",
    "lzma", "mailbox", "mailcap", "marshal", "math", "mimetypes", "mmap", "modulefinder", "msilib",
    "msvcrt", "multiprocessing", "netrc", "nis", "nntplib", "nt", "ntpath", "nturl2path", "numbers",
    "opcode", "operator", "optparse", "os", "ossaudiodev", "pathlib", "pdb", "pickle",
    "pickletools", "pipes", "pkgutil", "platform", "plistlib", "poplib", "posix", "posixpath",
    "pprint", "profile", "pstats", "pty", "pwd", "py_compile", "pyclbr", "pydoc", "pydoc_data",
    "pyexpat", "queue", "quopri", "random", "re", "readline", "reprlib", "resource", "rlcompleter",
    "runpy", "sched", "secrets", "select", "selectors", "shelve", "shlex", "shutil", "signal",
    "site", "smtpd", "smtplib", "sndhdr", "socket", "socketserver", "spwd", "sqlite3",
    "sre_compile", "sre_constants", "sre_parse", "ssl", "stat", "statistics", "string",
    "stringprep", "struct", "subprocess", "sunau", "symtable", "sys", "sysconfig", "syslog",
    "tabnanny", "tarfile", "telnetlib", "tempfile", "termios", "textwrap", "this", "threading",
    "time", "timeit", "tkinter", "token", "tokenize", "trace", "traceback", "tracemalloc", "tty",
    "turtle", "turtledemo", "types", "typing", "unicodedata", "unittest", "urllib", "uu", "uuid",
    "venv", "warnings", "wave", "weakref", "webbrowser", "winreg", "winsound", "wsgiref", "xdrlib",
    "xml", "xmlrpc", "zipapp", "zipfile", "zipimport", "zlib", "zoneinfo",
  };
  return names;
}

std::string top_level(const std::string& module) { return module.substr(0, module.find('.')); }

}  // namespace

AliasTable AliasTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractViolation("cannot read alias table '" + path + "'");
  std::map<std::string, std::string> entries;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() || line.find('\t', tab + 1) != std::string::npos) {
      throw ContractViolation(path + ":" + std::to_string(number) + ": expected module<TAB>package");
    }
    entries[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return AliasTable(std::move(entries));
}

const AliasTable& AliasTable::bundled() {
  static const AliasTable table = [] {
    const char* override_path = std::getenv("SNIPEXEC_ALIAS_TABLE");
    return load(override_path != nullptr ? override_path : SNIPEXEC_DATA_DIR "/package_aliases.tsv");
  }();
  return table;
}

std::string AliasTable::package_for(const std::string& module) const {
  std::string key = module;
  for (;;) {
    if (const auto it = entries_.find(key); it != entries_.end()) return it->second;
    const auto dot = key.rfind('.');
    if (dot == std::string::npos) break;
    key.erase(dot);
  }
  return top_level(module);
}

bool is_stdlib_module(const std::string& name) { return stdlib_modules().count(top_level(name)) != 0; }

std::vector<std::string> imported_modules(const std::string& import_line) {
  std::vector<std::string> modules;
  python::Module module;
  try {
    module = python::parse_module(import_line);
  } catch (const python::ParseError&) {
    return modules;
  }
  python::walk_statements(module.body, [&](const python::Stmt& stmt) {
    if (stmt.kind == python::StmtKind::Import) {
      for (const python::Alias& alias : stmt.names) modules.push_back(alias.name);
    } else if (stmt.kind == python::StmtKind::ImportFrom && stmt.level == 0) {
      modules.push_back(stmt.module);
    }
  });
  return modules;
}

std::string normalize_package(const std::string& name) {
  std::string out;
  for (char c : name) {
    if (c == '-' || c == '_' || c == '.') {
      if (out.empty() || out.back() != '-') out.push_back('-');
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

std::set<std::string> installed_packages(const std::string& env_dir) {
  std::set<std::string> installed;
  if (env_dir.empty()) return installed;
  std::error_code ec;
  for (const fs::path& lib : {fs::path(env_dir) / "lib", fs::path(env_dir) / "lib64"}) {
    if (!fs::is_directory(lib, ec)) continue;
    for (const auto& version : fs::directory_iterator(lib, ec)) {
      const fs::path site = version.path() / "site-packages";
      if (!fs::is_directory(site, ec)) continue;
      for (const auto& entry : fs::directory_iterator(site, ec)) {
        std::string name = entry.path().filename().string();
        const std::string ext = entry.path().extension().string();
        if (ext == ".dist-info" || ext == ".egg-info") {
          name = entry.path().stem().string();
          name = name.substr(0, name.find('-'));  // drop "-<version>"
        } else if (ext == ".py") {
          name = entry.path().stem().string();
        } else if (!entry.is_directory(ec) || name.find('.') != std::string::npos) {
          continue;
        }
        installed.insert(normalize_package(name));
      }
    }
  }
  return installed;
}

DependencyPlan plan_dependencies(const Prefix& prefix, const std::string& env_dir, const AliasTable& aliases) {
  DependencyPlan plan;
  std::set<std::string> modules;
  for (const std::string& line : prefix.imports) {
    for (const std::string& module : imported_modules(line)) {
      plan.import_names.insert(top_level(module));
      modules.insert(module);
    }
  }
  const std::set<std::string> present = installed_packages(env_dir);
  for (const std::string& module : modules) {
    if (is_stdlib_module(module)) continue;
    const std::string package = aliases.package_for(module);
    plan.package_names.insert(package);
    if (present.count(normalize_package(package)) != 0 || present.count(normalize_package(top_level(module))) != 0) {
      plan.already_installed.insert(package);
    }
  }
  std::set_difference(plan.package_names.begin(), plan.package_names.end(), plan.already_installed.begin(),
                      plan.already_installed.end(), std::inserter(plan.to_install, plan.to_install.end()));
  return plan;
}

Installer::Installer(std::string env_dir, Runner runner) : env_dir_(std::move(env_dir)), runner_(std::move(runner)) {
  if (env_dir_.empty()) throw ContractViolation("an environment directory is required");
  if (!runner_) {
    runner_ = [](const std::vector<std::string>& argv) {
      ProcessSpec spec;
      spec.argv = argv;
      spec.env = filtered_environment({});
      spec.timeout = std::chrono::minutes(15);
      const ProcessResult r = run_process(spec);
      return r.exited() && !r.timed_out ? r.exit_code : -1;
    };
  }
}

void Installer::ensure_environment() {
  std::lock_guard lock(mutex_);
  if (fs::exists(fs::path(env_dir_) / "bin" / "python")) return;
  if (runner_({"python3", "-m", "venv", env_dir_}) != 0) {
    throw HarnessError("cannot create the environment at '" + env_dir_ + "'");
  }
}

InstallReport Installer::install(const DependencyPlan& plan) {
  std::lock_guard lock(mutex_);
  InstallReport report;
  const std::string python = (fs::path(env_dir_) / "bin" / "python").string();
  for (const std::string& package : plan.to_install) {
    if (attempted_.count(package) != 0) {
      report.cached.push_back(package);
      continue;
    }
    const bool ok = runner_({python, "-m", "pip", "install", "--disable-pip-version-check", "--quiet", package}) == 0;
    attempted_[package] = ok;
    (ok ? report.installed : report.failed).push_back(package);
  }
  return report;
}

}  // namespace snipexec
