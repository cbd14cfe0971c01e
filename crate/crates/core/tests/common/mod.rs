use graph_pir::storage::StorageSystem;

/// The (6,3,2,9) example system: messages are vertices, databases edges.
pub fn table1_system() -> StorageSystem {
    StorageSystem::new(
        6,
        3,
        2,
        9,
        vec![
            vec![1, 2],
            vec![1, 4],
            vec![1, 6],
            vec![2, 3],
            vec![2, 5],
            vec![3, 4],
            vec![3, 6],
            vec![4, 5],
            vec![5, 6],
        ],
    )
    .unwrap()
}
