#pragma once

#include <string>

#include <Eigen/Dense>

#include "sparsefactor/path.hpp"
#include "sparsefactor/simulation.hpp"

namespace sparsefactor {

inline constexpr const char* kVersion = "0.1.0";

/// Reads a numeric CSV matrix. A non-numeric first line is treated as a
/// header and skipped. Throws invalid_data_error on malformed input.
Eigen::MatrixXd read_csv_matrix(const std::string& path);

void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& m);

/// Model <-> JSON ("lambda" row-major, "psi", "p", "m").
std::string model_to_json(const FactorModel& model);
FactorModel model_from_json(const std::string& text);

/// Path document: {"grid": {"rho": [...], "gamma": [...]}, "cells": [...],
/// "meta": {...}} with one cell object per (gamma, rho) holding rho_star,
/// loglik, penalized, df, aic/bic/caic, row-major lambda, psi and converged.
/// Infinite gamma serializes as the string "inf". When `best` is non-null,
/// a "best" object naming the selected cell is included.
std::string path_to_json(const PathResult& path,
                         const std::pair<int, int>* best = nullptr,
                         const char* criterion_name = nullptr,
                         double elapsed_seconds = -1.0);

/// Minimal reader for documents written by path_to_json: grid, per-cell
/// criteria/df/loglik and the fitted models (enough to re-run selection).
PathResult path_from_json(const std::string& text);

/// Long-format plot table: gamma,rho,i,j,lambda (one line per loading).
void write_path_csv(const std::string& path, const PathResult& result);

std::string report_to_json(const StudyReport& report);

/// Table-shaped CSV mirror of the study report (one row per method x
/// criterion with MSE/TPR/TNR columns).
void write_report_csv(const std::string& path, const StudyReport& report);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace sparsefactor
