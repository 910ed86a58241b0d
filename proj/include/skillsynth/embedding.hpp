#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "skillsynth/errors.hpp"

namespace skillsynth {

template <class Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Embedding = Eigen::VectorXf;
using EmbeddingMatrix = RowMatrix<float>;

inline constexpr double kUnitNormTolerance = 1e-6;

/// Cosine similarity of two unit vectors, accumulated in double.
template <class A, class B>
double cosine_similarity(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
    return a.template cast<double>().dot(b.template cast<double>());
}

template <class A, class B>
double cosine_distance(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
    return 1.0 - cosine_similarity(a, b);
}

template <class Derived>
bool is_unit_norm(const Eigen::MatrixBase<Derived>& v, double tol = kUnitNormTolerance) {
    return std::abs(v.template cast<double>().norm() - 1.0) <= tol;
}

/// Scales every row to unit length; zero rows are left as-is.
template <class Derived>
void normalize_rows(Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const auto n = m.row(i).norm();
        if (n > 0) m.row(i) /= n;
    }
}

/// Pairwise cosine similarity (rows are unit vectors), computed in double.
template <class Derived>
Eigen::MatrixXd gram_matrix(const Eigen::MatrixBase<Derived>& rows) {
    const Eigen::MatrixXd r = rows.template cast<double>();
    return r * r.transpose();
}

/// Id-keyed table of embeddings, one row per id.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::vector<std::string> ids, EmbeddingMatrix rows);

    std::size_t size() const { return ids_.size(); }
    Eigen::Index dim() const { return rows_.cols(); }
    bool empty() const { return ids_.empty(); }

    const std::vector<std::string>& ids() const { return ids_; }
    const EmbeddingMatrix& rows() const { return rows_; }
    auto row(std::size_t i) const { return rows_.row(static_cast<Eigen::Index>(i)); }

    std::optional<std::size_t> find(const std::string& id) const;
    /// Throws DataError naming the id when it is absent.
    std::size_t index_of(const std::string& id) const;

    /// Sub-table in the order of `ids`.
    EmbeddingTable select(const std::vector<std::string>& ids) const;

    /// Throws DataError on a non-unit row.
    void require_unit_rows(double tol = kUnitNormTolerance) const;

private:
    std::vector<std::string> ids_;
    EmbeddingMatrix rows_;
    std::unordered_map<std::string, std::size_t> lookup_;
};

// Binary columnar format: 16-byte header ("SSEMBED1", u32 dim, u32 count,
// little-endian), then per id a u32 byte length and UTF-8 bytes, then the
// row-major float32 matrix.
void write_embeddings_binary(const EmbeddingTable& t, const std::filesystem::path& file);
EmbeddingTable read_embeddings_binary(const std::filesystem::path& file);

// JSON Lines: {"id": "...", "vector": [..]} per line.
std::string embeddings_to_json_lines(const EmbeddingTable& t);
EmbeddingTable embeddings_from_json_lines(std::string_view text, std::string_view source_name = "<embeddings>");

} // namespace skillsynth
