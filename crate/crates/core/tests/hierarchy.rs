use hierent::RegionGrid;
use proptest::prelude::*;

proptest! {
    #[test]
    fn layers_cover_disjointly_and_nest(w in 1usize..80, h in 1usize..80, n in 0u32..7) {
        prop_assume!((1usize << n) <= w.min(h));
        let grid = RegionGrid::new(w, h, n).unwrap();
        prop_assert_eq!(grid.len(), 1 << (2 * n));
        prop_assert_eq!(grid.regions().map(|r| r.area()).sum::<usize>(), w * h);
        prop_assert!(grid.regions().all(|r| r.area() >= 1));

        let mut hits = vec![0u8; w * h];
        for (i, r) in grid.regions().enumerate() {
            for y in r.y0..r.y1 {
                for x in r.x0..r.x1 {
                    hits[y * w + x] += 1;
                    prop_assert_eq!(grid.region_of_pixel(x, y).unwrap(), i);
                }
            }
        }
        prop_assert!(hits.iter().all(|&c| c == 1));

        if let Ok(fine) = grid.finer() {
            for child in fine.regions() {
                let parents = grid.regions().filter(|p| p.contains_rect(&child)).count();
                prop_assert_eq!(parents, 1);
            }
            for i in 0..grid.len() {
                let kids = grid.children_of(i).unwrap();
                let parent = grid.region(i);
                prop_assert_eq!(kids.iter().map(|k| k.area()).sum::<usize>(), parent.area());
                prop_assert!(kids.iter().all(|k| parent.contains_rect(k)));
            }
        }
    }

    #[test]
    fn divisible_dimensions_give_equal_regions(a in 1usize..6, b in 1usize..6, n in 0u32..5) {
        let side = 1usize << n;
        let grid = RegionGrid::new(a * side, b * side, n).unwrap();
        prop_assert!(grid.regions().all(|r| r.area() == a * b));
    }
}
