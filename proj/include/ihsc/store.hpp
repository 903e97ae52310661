#pragma once

#include <filesystem>
#include <string>

#include "ihsc/digest.hpp"
#include "ihsc/file_ref.hpp"

namespace ihsc::store {

enum class StoreErrorKind { NotFound, Tampered, Io, EmptyInput };

class StoreError : public std::runtime_error {
public:
    StoreError(StoreErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    StoreErrorKind kind() const { return kind_; }

private:
    StoreErrorKind kind_;
};

/// Content-addressed file store on a directory tree keyed by digest prefix:
/// <root>/<first2hex>/<next2hex>/<full 64-hex digest>. URIs are paths
/// relative to the store root.
class FileStore {
public:
    explicit FileStore(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    /// Persist bytes under their digest. Identical bytes map to the same
    /// URI. Writes go to a temp file and are renamed into place.
    FileRef put_file(const Bytes& data);

    /// Returns the stored bytes only when their digest still matches the
    /// anchor; a mismatch raises the "database is tampered" error class,
    /// distinct from not-found.
    Bytes get_verified(const FileRef& ref) const;

    bool contains(const FileRef& ref) const;

    static std::string uri_for(const Digest& digest);

private:
    std::filesystem::path root_;
};

}  // namespace ihsc::store
