// Guide chapters are registered in lib.rs once the book exists.
