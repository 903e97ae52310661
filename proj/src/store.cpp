#include "ihsc/store.hpp"

#include <fstream>
#include <system_error>

namespace ihsc::store {

namespace fs = std::filesystem;

FileStore::FileStore(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) {
        throw StoreError(StoreErrorKind::Io,
                         "cannot create store root " + root_.string() + ": " +
                             ec.message());
    }
}

std::string FileStore::uri_for(const Digest& digest) {
    const std::string hex = digest.hex();
    return hex.substr(0, 2) + "/" + hex.substr(2, 2) + "/" + hex;
}

FileRef FileStore::put_file(const Bytes& data) {
    if (data.empty()) {
        throw StoreError(StoreErrorKind::EmptyInput,
                         "refusing to store an empty file");
    }
    const Digest digest = sha256(data);
    FileRef ref{uri_for(digest), digest, data.size()};
    const fs::path target = root_ / ref.uri;
    if (fs::exists(target)) {
        return ref;  // content-addressed: identical bytes already stored
    }
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) {
        throw StoreError(StoreErrorKind::Io,
                         "cannot create " + target.parent_path().string());
    }
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw StoreError(StoreErrorKind::Io,
                             "cannot open " + tmp.string() + " for writing");
        }
        out.write(reinterpret_cast<const char*>(data.data()),
                  static_cast<std::streamsize>(data.size()));
        if (!out) {
            throw StoreError(StoreErrorKind::Io,
                             "short write to " + tmp.string());
        }
    }
    fs::rename(tmp, target, ec);
    if (ec) {
        throw StoreError(StoreErrorKind::Io,
                         "cannot rename " + tmp.string() + ": " + ec.message());
    }
    return ref;
}

bool FileStore::contains(const FileRef& ref) const {
    return fs::exists(root_ / ref.uri);
}

Bytes FileStore::get_verified(const FileRef& ref) const {
    const fs::path path = root_ / ref.uri;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StoreError(StoreErrorKind::NotFound,
                         "no stored file at " + ref.uri);
    }
    Bytes data((std::istreambuf_iterator<char>(in)),
               std::istreambuf_iterator<char>());
    if (sha256(data) != ref.file_digest) {
        throw StoreError(StoreErrorKind::Tampered, "database is tampered");
    }
    return data;
}

}  // namespace ihsc::store
