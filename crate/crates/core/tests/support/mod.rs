pub mod plane_oracle;
